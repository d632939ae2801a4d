"""
Shared plumbing for the risk management commands: common options, error
translation to exit codes, JSON/CSV output and run manifests.
"""
import io
import json
import logging
import sys
from typing import Any, Dict, Iterable, Optional

from django.core.management.base import BaseCommand, CommandError, handle_default_options
from django.utils import timezone

from risk import io as risk_io
from risk.exceptions import RiskError
from risk.finite_risk import RiskCurve
from risk.loss_model import LossSpec

logger = logging.getLogger('risk.commands')

# Django's own options, left out of manifests
_DJANGO_OPTIONS = {'verbosity', 'settings', 'pythonpath', 'traceback', 'no_color', 'force_color', 'skip_checks'}


def _plain(text: str) -> str:
    return text


def error_payload(exc: Exception, exit_code: Optional[int] = None) -> Dict[str, Any]:
    if isinstance(exc, RiskError):
        payload = exc.to_dict()
    else:
        payload = {'error': exc.__class__.__name__, 'message': str(exc), 'exit_code': exit_code or 1}
    if exit_code is not None:
        payload['exit_code'] = exit_code
    return payload


def command_error(payload: Dict[str, Any]) -> CommandError:
    """CommandError whose message is the one-object JSON error document."""
    return CommandError(json.dumps(risk_io.jsonable(payload), sort_keys=True), returncode=payload['exit_code'])


class RiskCommand(BaseCommand):
    """
    Base for every risk command.

    Subclasses implement ``run(**options)``; RiskError raised there becomes a
    CommandError carrying the class's exit code and a JSON error document,
    which is printed bare on stderr when invoked from the command line.
    """

    requires_system_checks = []
    requires_migrations_checks = False

    def run_from_argv(self, argv):
        # argparse usage errors become CommandError (exit 1) instead of exiting with 2
        parser = self.create_parser(argv[0], argv[1])
        try:
            options = parser.parse_args(argv[2:])
            cmd_options = vars(options)
            args = cmd_options.pop('args', ())
            handle_default_options(options)
            self.execute(*args, **cmd_options)
        except CommandError as exc:
            if not str(exc).startswith('{'):
                exc = command_error({'error': 'UsageError', 'message': str(exc), 'exit_code': 1})
            self.stderr.write(str(exc), style_func=_plain)
            sys.exit(exc.returncode)

    def add_loss_arguments(self, parser) -> None:
        parser.add_argument('--loss', required=True,
                            help='Built-in loss name (mse, mae, interval, generalized_interval, constant-one) '
                                 'or a JSON loss description file')
        parser.add_argument('--loss-params', dest='loss_params', default=None,
                            help='JSON object of parameters for a built-in loss, e.g. \'{"mu1": 3, "mu2": 3}\'')

    def add_output_arguments(self, parser) -> None:
        parser.add_argument('--out', default=None, help='Write the result to this file instead of stdout')

    def handle(self, *args, **options):
        self._configure_logging(options.get('verbosity', 1))
        self.started_at = timezone.now()
        try:
            self.run(**options)
        except RiskError as exc:
            logger.warning(f"[Command] {self.command_name()} failed: {exc}")
            raise command_error(error_payload(exc))
        except (OSError, ValueError) as exc:
            logger.warning(f"[Command] {self.command_name()} failed: {exc}")
            raise command_error(error_payload(exc, exit_code=1))

    def run(self, **options):
        raise NotImplementedError

    # Helpers

    def command_name(self) -> str:
        return self.__class__.__module__.rsplit('.', 1)[-1]

    @staticmethod
    def _configure_logging(verbosity: int) -> None:
        if verbosity >= 3:
            logging.getLogger('risk').setLevel(logging.DEBUG)
        elif verbosity == 2:
            logging.getLogger('risk').setLevel(logging.INFO)

    def load_loss(self, options) -> LossSpec:
        return risk_io.load_loss(options['loss'], options.get('loss_params'))

    def manifest(self, options: Dict[str, Any], seeds: Iterable[int] = ()) -> Dict[str, Any]:
        params = {k: v for k, v in options.items() if k not in _DJANGO_OPTIONS and not k.startswith('std')}
        return risk_io.build_manifest(self.command_name(), params, seeds, started_at=self.started_at)

    def emit_json(self, document: Dict[str, Any], options: Dict[str, Any], seeds: Iterable[int] = ()) -> None:
        document = dict(document, manifest=self.manifest(options, seeds))
        text = risk_io.dump_json(document)
        if options.get('out'):
            risk_io.write_text(options['out'], text + '\n')
        else:
            self.stdout.write(text)

    def emit_text(self, text: str, options: Dict[str, Any], seeds: Iterable[int] = ()) -> None:
        """Text to --out (manifest alongside) or to stdout (manifest on stderr)."""
        manifest = risk_io.dump_json(self.manifest(options, seeds))
        out = options.get('out')
        if out:
            risk_io.write_text(out, text)
            risk_io.write_text(risk_io.manifest_path(out), manifest + '\n')
        else:
            self.stdout.write(text, ending='')
            self.stderr.write(manifest, style_func=_plain)

    def emit_curve(self, curve: RiskCurve, options: Dict[str, Any], seeds: Iterable[int] = ()) -> None:
        buffer = io.StringIO()
        risk_io.write_curve_csv(curve, buffer)
        self.emit_text(buffer.getvalue(), options, seeds)

        if curve.failed:
            raise command_error({
                'error': 'RowFailure',
                'message': f"{len(curve.failed)} of {len(curve.records)} rows failed",
                'rows': [rec.to_dict() for rec in curve.failed],
                'exit_code': 1,
            })
