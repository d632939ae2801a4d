from ._curve import CurveCommand


class Command(CurveCommand):
    help = 'Finite-p risk eta(p) of omega/(n+c) with a truncation certificate, as CSV'
