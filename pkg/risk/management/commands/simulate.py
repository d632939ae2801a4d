from ._curve import CurveCommand


class Command(CurveCommand):
    help = 'Monte Carlo estimate of eta(p) with standard errors, as CSV; identical output for a fixed --seed'

    simulate_default = True
