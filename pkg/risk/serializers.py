import math

from rest_framework import serializers

from .exceptions import DomainError
from .loss_model import INF, LossSpec, builtin, piecewise_power

BUILTIN_KINDS = ['mse', 'mae', 'interval', 'generalized_interval']
LOSS_KINDS = BUILTIN_KINDS + ['piecewise_power']

BUILTIN_PARAMS = {
    'mse': set(),
    'mae': set(),
    'interval': {'mu1', 'mu2'},
    'generalized_interval': {'A1', 'A2', 'mu1', 'mu2'},
}


class BoundField(serializers.Field):
    """A segment end: a number, or the string "inf"."""

    default_error_messages = {
        'invalid': 'Expected a number or "inf".',
        'negative': 'Segment bounds must be non-negative.',
    }

    def to_internal_value(self, data):
        if isinstance(data, str) and data.strip().lower() in ('inf', '+inf', 'infinity'):
            return INF
        if isinstance(data, bool):
            self.fail('invalid')
        try:
            value = float(data)
        except (TypeError, ValueError):
            self.fail('invalid')
        if math.isnan(value):
            self.fail('invalid')
        if value < 0:
            self.fail('negative')
        return value

    def to_representation(self, value):
        return 'inf' if math.isinf(value) else float(value)


class PowerTermSerializer(serializers.Serializer):
    coef = serializers.FloatField()
    power = serializers.FloatField()


class SegmentSerializer(serializers.Serializer):
    lo = BoundField()
    hi = BoundField()
    terms = PowerTermSerializer(many=True, required=False, default=list)

    def validate(self, attrs):
        if not attrs['lo'] < attrs['hi']:
            raise serializers.ValidationError(f"empty segment [{attrs['lo']}, {attrs['hi']})")
        return attrs


class LossFileSerializer(serializers.Serializer):
    """JSON description of a loss function.

    Built-in kinds take their parameters from ``params``; ``piecewise_power``
    takes contiguous ``segments`` covering (0, inf). The envelope exponent
    K_prime is checked against r when the loss is used, not here.
    """

    kind = serializers.ChoiceField(choices=LOSS_KINDS)
    name = serializers.CharField(required=False, allow_blank=True)
    params = serializers.DictField(child=serializers.FloatField(), required=False, default=dict)
    segments = SegmentSerializer(many=True, required=False)
    K = serializers.FloatField(required=False, allow_null=True)
    K_prime = serializers.FloatField(required=False, allow_null=True)
    xi = serializers.FloatField(required=False, allow_null=True, min_value=0)
    xi_prime = serializers.FloatField(required=False, allow_null=True, min_value=0)

    def validate(self, attrs):
        kind = attrs['kind']
        if kind == 'piecewise_power':
            self._validate_segments(attrs.get('segments'))
        else:
            expected = BUILTIN_PARAMS[kind]
            given = set(attrs.get('params') or {})
            if given != expected:
                raise serializers.ValidationError(
                    {'params': f"{kind} expects parameters {sorted(expected)}, got {sorted(given)}"}
                )
        for key in ('xi', 'xi_prime'):
            if attrs.get(key) is not None and not attrs[key] > 0:
                raise serializers.ValidationError({key: 'must be positive'})
        try:
            attrs['loss'] = self._build(attrs)
        except DomainError as exc:
            raise serializers.ValidationError(str(exc))
        return attrs

    @staticmethod
    def _validate_segments(segments):
        if not segments:
            raise serializers.ValidationError({'segments': 'piecewise_power needs at least one segment'})
        if segments[0]['lo'] != 0:
            raise serializers.ValidationError({'segments': 'first segment must start at 0'})
        if not math.isinf(segments[-1]['hi']):
            raise serializers.ValidationError({'segments': 'last segment must end at "inf"'})
        for i, (left, right) in enumerate(zip(segments[:-1], segments[1:])):
            if left['hi'] != right['lo']:
                raise serializers.ValidationError(
                    {'segments': f"segments {i} and {i + 1} are not contiguous ({left['hi']} != {right['lo']})"}
                )

    @staticmethod
    def _build(attrs) -> LossSpec:
        kind = attrs['kind']
        if kind != 'piecewise_power':
            return builtin(kind, **attrs.get('params', {}))
        return piecewise_power(
            [(s['lo'], s['hi'], [(t['coef'], t['power']) for t in s['terms']]) for s in attrs['segments']],
            K=attrs.get('K'),
            K_prime=attrs.get('K_prime'),
            xi=attrs.get('xi'),
            xi_prime=attrs.get('xi_prime'),
            name=attrs.get('name') or 'piecewise_power',
        )


def loss_to_dict(loss: LossSpec) -> dict:
    """LossFileSchema representation; built-ins are written by kind and parameters."""
    if not loss.is_piecewise_power:
        raise DomainError(f"{loss.name} is a callback loss and has no file representation")
    if loss.kind in BUILTIN_KINDS and 'scale' not in loss.param_dict:
        return {'kind': loss.kind, 'name': loss.name, 'params': loss.param_dict}
    segments = SegmentSerializer(
        [{'lo': s.lo, 'hi': s.hi, 'terms': [{'coef': t.coef, 'power': t.power} for t in s.terms]}
         for s in loss.segments],
        many=True,
    ).data
    return {
        'kind': 'piecewise_power',
        'name': loss.name,
        'segments': [dict(s) for s in segments],
        'K': loss.K,
        'K_prime': loss.K_prime,
        'xi': loss.xi,
        'xi_prime': loss.xi_prime,
    }
