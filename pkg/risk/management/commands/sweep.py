from ._curve import CurveCommand


class Command(CurveCommand):
    help = 'Risk curve over a p grid followed by the p -> 0 reference row, as CSV'

    reference_row = True
