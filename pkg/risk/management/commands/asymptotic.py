import logging

from risk.asymptotic_risk import VARIABLES, asymptotic_risk

from ._base import RiskCommand

logger = logging.getLogger('risk.commands')


class Command(RiskCommand):
    help = 'Asymptotic risk eta_bar(omega) of estimators with n*g(n) -> omega, as JSON'

    def add_arguments(self, parser):
        self.add_loss_arguments(parser)
        parser.add_argument('--r', type=int, required=True, help='Number of successes')
        parser.add_argument('--omega', type=float, required=True, help='Asymptotic scale of the estimator')
        parser.add_argument('--method', choices=['auto', 'analytic', 'adaptive', 'both'], default='auto',
                            help='Term-wise incomplete gamma assembly, adaptive quadrature, or both compared')
        parser.add_argument('--variable', choices=VARIABLES, default='nu',
                            help='Integration variable for adaptive quadrature')
        self.add_output_arguments(parser)

    def run(self, **options):
        loss = self.load_loss(options)
        r, omega, method = options['r'], options['omega'], options['method']

        if method == 'both':
            analytic = asymptotic_risk(loss, r, omega, method='analytic')
            adaptive = asymptotic_risk(loss, r, omega, method='adaptive', variable=options['variable'])
            agreement = abs(analytic.value - adaptive.value) / max(abs(analytic.value), 1e-300)
            logger.info(f"[Command] analytic/adaptive relative difference {agreement:.3e}")
            document = {
                'eta_bar': analytic.value,
                'abs_error': max(analytic.abs_error_estimate, abs(analytic.value - adaptive.value)),
                'method': 'both',
                'agreement': agreement,
                'analytic': analytic.to_dict(),
                'adaptive': adaptive.to_dict(),
            }
        else:
            report = asymptotic_risk(loss, r, omega, method=method, variable=options['variable'])
            document = {
                'eta_bar': report.value,
                'abs_error': report.abs_error_estimate,
                'method': report.method,
                'subdivisions': report.subdivisions,
            }
        document.update({'loss': loss.name, 'r': r, 'omega': omega})
        self.emit_json(document, options)
