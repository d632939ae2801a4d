import math
from typing import Any, Dict, List, Optional

from risk import io as risk_io
from risk.suites import SUITES, SuiteResponse, run_suites

from ._base import RiskCommand, command_error

FAILURE_EXIT_CODE = 4


def worst_margin(response: SuiteResponse) -> Optional[float]:
    """Smallest distance to failure over the asserted rows."""
    margins = []
    for row in response.get('rows', []):
        if row.get('status') in ('info', 'skipped'):
            continue
        if isinstance(row.get('margin'), (int, float)):
            margins.append(float(row['margin']))
        elif isinstance(row.get('error'), (int, float)) and isinstance(row.get('tolerance'), (int, float)):
            margins.append(float(row['tolerance']) - float(row['error']))
    finite = [m for m in margins if math.isfinite(m)]
    return min(finite) if finite else None


class Command(RiskCommand):
    help = 'Run verification suites and print a pass/fail table (exit 4 on any failure)'

    def add_arguments(self, parser):
        parser.add_argument('--suite', default='all',
                            help=f"Comma-separated suite names or 'all': {', '.join(SUITES)}")
        parser.add_argument('--r-range', dest='r_range', default=None,
                            help='Override the r values of every selected suite, e.g. 3..10')
        parser.add_argument('--json', action='store_true', help='Print a JSON report instead of a table')
        self.add_output_arguments(parser)

    def run(self, **options):
        names = [name.strip() for name in options['suite'].split(',') if name.strip()]
        unknown = [name for name in names if name != 'all' and name not in SUITES]
        if unknown or not names:
            raise command_error({
                'error': 'UsageError',
                'message': f"unknown suite(s) {unknown}; expected 'all' or one of {list(SUITES)}",
                'exit_code': 1,
            })
        r_values = risk_io.parse_r_range(options['r_range']) if options['r_range'] else None

        responses = run_suites(names, r_values)
        passed = all(response.get('passed') for response in responses)

        if options['json']:
            self.emit_json({'passed': passed, 'suites': responses}, options)
        else:
            self.emit_text(self.render(responses) + '\n', options)

        if not passed:
            failing = [response['suite'] for response in responses if not response.get('passed')]
            raise command_error({
                'error': 'VerificationError',
                'message': f"failing suites: {', '.join(failing)}",
                'exit_code': FAILURE_EXIT_CODE,
            })

    @staticmethod
    def render(responses: List[SuiteResponse]) -> str:
        lines = [f"{'suite':<22} {'result':<7} {'checks':>7} {'failed':>7} {'worst margin':>14} {'seconds':>8}"]
        for response in responses:
            if response.get('status') == 'error':
                lines.append(f"{response['suite']:<22} {'ERROR':<7} {response.get('error', '')}")
                continue
            margin = worst_margin(response)
            lines.append(
                f"{response['suite']:<22} {'PASS' if response['passed'] else 'FAIL':<7} "
                f"{response['checks']:>7} {response['failures']:>7} "
                f"{'-' if margin is None else format(margin, '.3e'):>14} {response['elapsed']:>8.2f}"
            )
            for row in response['rows']:
                if 'trend' in row or not row.get('passed'):
                    lines.append('    ' + Command._describe(row))
        return '\n'.join(lines)

    @staticmethod
    def _describe(row: Dict[str, Any]) -> str:
        keys = [k for k in ('r', 'p', 'c', 'omega', 's', 'u', 'loss') if k in row]
        where = ' '.join(f"{k}={row[k]:g}" if isinstance(row[k], float) else f"{k}={row[k]}" for k in keys)
        status = 'ok' if row.get('passed') else 'FAIL'
        if 'trend' in row:
            trend = ' > '.join(f"{d:.2e}" for d in row['trend'])
            return f"{status:<4} {row['check']} [{where}] |eta(p) - eta_bar| / eta_bar: {trend}"
        detail = f"value={row.get('value')} expected={row.get('expected')} error={row.get('error')}"
        return f"{status:<4} {row['check']} [{where}] {detail}"
