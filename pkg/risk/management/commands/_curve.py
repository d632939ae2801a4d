from risk import io as risk_io
from risk.exceptions import DomainError
from risk.finite_risk import SimConfig, risk_sweep, simulate_sweep

from ._base import RiskCommand


class CurveCommand(RiskCommand):
    """Finite-p risk over one p or a grid, written as CSV."""

    reference_row = False
    simulate_default = False

    def add_arguments(self, parser):
        self.add_loss_arguments(parser)
        parser.add_argument('--estimator', default='omega/(n+c)',
                            help='Estimator form; only omega/(n+c) is supported, optionally with --table')
        parser.add_argument('--omega', type=float, default=None, help='Estimator scale omega')
        parser.add_argument('--c', type=int, default=0, help='Estimator shift c (integer >= 1 - r)')
        parser.add_argument('--table', default=None,
                            help='File of explicit values g(r), g(r+1), ... used before omega/(n+c) takes over')
        parser.add_argument('--r', type=int, required=True, help='Number of successes')
        grid = parser.add_mutually_exclusive_group(required=True)
        grid.add_argument('--p', type=float, default=None, help='Single success probability')
        grid.add_argument('--p-grid', dest='p_grid', default=None,
                          help='Comma-separated p values or logspace:LO:HI:COUNT')
        parser.add_argument('--tol', type=float, default=None, help='Truncation certificate target')
        parser.add_argument('--workers', type=int, default=None, help='Threads for grid points and batches')
        if not self.simulate_default:
            parser.add_argument('--simulate', action='store_true', help='Monte Carlo instead of the exact series')
        parser.add_argument('--samples', type=int, default=100000, help='Monte Carlo sample count')
        parser.add_argument('--seed', type=int, default=0, help='Monte Carlo seed')
        self.add_output_arguments(parser)

    def run(self, **options):
        loss = self.load_loss(options)
        r = options['r']
        est = risk_io.parse_estimator(options['estimator'], options['omega'], options['c'], options['table'])
        est.validate(r)
        if options['p'] is not None:
            if not 0 < options['p'] < 1:
                raise DomainError(f"--p must lie in (0, 1), got {options['p']}")
            grid = [options['p']]
        else:
            grid = risk_io.parse_p_grid(options['p_grid'])

        if self.simulate_default or options.get('simulate'):
            cfg = SimConfig(options['samples'], seed=options['seed'])
            if options['workers']:
                cfg.workers = options['workers']
            curve = simulate_sweep(loss, est, r, grid, cfg, reference=self.reference_row)
            self.emit_curve(curve, options, seeds=[options['seed']])
        else:
            curve = risk_sweep(loss, est, r, grid, tol=options['tol'], workers=options['workers'],
                               reference=self.reference_row)
            self.emit_curve(curve, options)
