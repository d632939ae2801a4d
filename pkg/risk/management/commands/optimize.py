from risk.exceptions import RiskError
from risk.optimizer import OptimizerConfig, closed_form_optimum, find_optimum

from ._base import RiskCommand


class Command(RiskCommand):
    help = 'Omega minimising the asymptotic risk, as JSON (exit 3 when no optimum exists)'

    def add_arguments(self, parser):
        self.add_loss_arguments(parser)
        parser.add_argument('--r', type=int, required=True, help='Number of successes')
        parser.add_argument('--tol', type=float, default=None, help='Relative width at which bisection stops')
        parser.add_argument('--seed-omega', dest='seed_omega', type=float, default=None,
                            help='Starting point of the bracket search (default r)')
        parser.add_argument('--method', choices=['auto', 'analytic', 'adaptive'], default='auto')
        self.add_output_arguments(parser)

    def run(self, **options):
        loss = self.load_loss(options)
        config = OptimizerConfig(seed_omega=options['seed_omega'], method=options['method'])
        if options['tol'] is not None:
            config.omega_rtol = options['tol']
        result = find_optimum(loss, options['r'], config)

        document = result.to_dict()
        try:
            document['closed_form'] = closed_form_optimum(loss.kind, options['r'], **loss.param_dict)
        except RiskError:
            document['closed_form'] = None
        document.update({'loss': loss.name, 'r': options['r']})
        self.emit_json(document, options)
