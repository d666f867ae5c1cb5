from django import forms
from django.conf import settings
from django.core.exceptions import ValidationError

from noise.generators import NOISE_KINDS
from xyz_model.lattice import BOUNDARY_CHOICES

from .models import EXPERIMENT_KINDS

MAX_LATTICE_SIZE = 3
PERIODIC_MIN_SIZE = 3
PAULI_AXES = ('x', 'y', 'z')

# kind -> sweep fields it needs
REQUIRED_SWEEPS = {
    'g-sweep': ('g_values',),
    'r-sweep': ('r_values',),
    'mitigate-critical-point': ('g_values',),
}
EXTRAPOLATING_KINDS = ('g-sweep', 'spectroscopy', 'mitigate-critical-point')


def config_defaults():
    simulation = getattr(settings, 'SIMULATION_DEFAULTS', {})
    return {
        'size': 2,
        'boundary': simulation.get('BOUNDARY', 'open'),
        'jx': simulation.get('JX', 0.9),
        'jz': simulation.get('JZ', 1.0),
        'g': 0.0,
        'coordination': simulation.get('COORDINATION', 4),
        'tau': simulation.get('TAU', 0.01),
        'max_time': simulation.get('MAX_TIME', 50.0),
        'tolerance': simulation.get('STEADY_TOLERANCE', 1e-7),
        'stride': simulation.get('RECORD_STRIDE', 10),
        'probe_window': simulation.get('PROBE_WINDOW', 1.0),
        'noise_kind': 'depolarizing',
        'r0': 0.01,
        'boosts': tuple(simulation.get('BOOST_FACTORS', (1.0, 1.5, 2.0))),
        'loosened': False,
        'signed': False,
        'noise_seed': 0,
        'normalize': True,
        'order': 1,
        'g_values': (),
        'r_values': (),
        'observable': 'x+z',
        'site': 0,
        'modes': None,
        'window': tuple(simulation.get('SCALING_WINDOW', (0.005, 0.05))),
        'magnus_order': 1,
        'seed': 0,
    }


class FloatListField(forms.Field):
    """
    A list of numbers: an expanded range, a comma list or a single value.
    """

    def to_python(self, value):
        if value in self.empty_values:
            return []
        if isinstance(value, str):
            value = value.split(',')
        elif not isinstance(value, (list, tuple)):
            value = [value]
        try:
            return [float(item) for item in value]
        except (TypeError, ValueError):
            raise ValidationError('Enter a list of numbers.', code='invalid')


class ExperimentConfigForm(forms.Form):
    """
    Validation of parsed configuration values for one experiment kind.

    Every field is optional; ``clean`` fills the gaps from
    SIMULATION_DEFAULTS and checks the fields each kind depends on.
    """

    kind = forms.ChoiceField(choices=EXPERIMENT_KINDS, required=False)

    size = forms.IntegerField(min_value=1, max_value=MAX_LATTICE_SIZE, required=False)
    boundary = forms.ChoiceField(choices=BOUNDARY_CHOICES, required=False)
    jx = forms.FloatField(required=False)
    jy = forms.FloatField(required=False)
    jz = forms.FloatField(required=False)
    g = forms.FloatField(required=False)
    coordination = forms.IntegerField(min_value=1, required=False)

    tau = forms.FloatField(required=False)
    max_time = forms.FloatField(required=False)
    tolerance = forms.FloatField(required=False)
    stride = forms.IntegerField(min_value=1, required=False)
    probe_window = forms.FloatField(required=False)

    noise_kind = forms.ChoiceField(choices=NOISE_KINDS, required=False)
    r0 = forms.FloatField(min_value=0.0, required=False)
    boosts = FloatListField(required=False)
    loosened = forms.NullBooleanField(required=False)
    signed = forms.NullBooleanField(required=False)
    noise_seed = forms.IntegerField(min_value=0, required=False)
    normalize = forms.NullBooleanField(required=False)
    order = forms.IntegerField(min_value=1, max_value=2, required=False)

    g_values = FloatListField(required=False)
    r_values = FloatListField(required=False)

    observable = forms.CharField(max_length=20, required=False)
    site = forms.IntegerField(min_value=0, required=False)
    modes = forms.IntegerField(min_value=1, required=False)

    window = FloatListField(required=False)
    magnus_order = forms.IntegerField(min_value=1, max_value=2, required=False)
    seed = forms.IntegerField(min_value=0, required=False)

    def __init__(self, *args, **kwargs):
        self.kind = kwargs.pop('kind', None)
        super().__init__(*args, **kwargs)

    def _positive(self, name):
        value = self.cleaned_data.get(name)
        if value is not None and not value > 0:
            raise ValidationError('Must be positive.')
        return value

    def clean_tau(self):
        return self._positive('tau')

    def clean_max_time(self):
        return self._positive('max_time')

    def clean_tolerance(self):
        return self._positive('tolerance')

    def clean_probe_window(self):
        return self._positive('probe_window')

    def clean_boosts(self):
        boosts = self.cleaned_data.get('boosts')
        if not boosts:
            return None
        if any(c < 1 for c in boosts):
            raise ValidationError('Boost factors must be at least 1.')
        if len(set(boosts)) != len(boosts):
            raise ValidationError('Boost factors must be distinct.')
        return tuple(sorted(boosts))

    def _monotone(self, name):
        values = self.cleaned_data.get(name)
        if not values:
            return None
        steps = [b - a for a, b in zip(values, values[1:])]
        if steps and not (all(s > 0 for s in steps) or all(s < 0 for s in steps)):
            raise ValidationError('Sweep values must be strictly monotone.')
        return tuple(values)

    def clean_g_values(self):
        return self._monotone('g_values')

    def clean_r_values(self):
        values = self._monotone('r_values')
        if values and min(values) < 0:
            raise ValidationError('Noise strengths must be non-negative.')
        return values

    def clean_window(self):
        window = self.cleaned_data.get('window')
        if not window:
            return None
        if len(window) != 2 or not 0 < window[0] < window[1]:
            raise ValidationError('Critical window must be two values with 0 < w_min < w_max.')
        return tuple(window)

    def clean_observable(self):
        observable = (self.cleaned_data.get('observable') or '').replace(' ', '').lower()
        if not observable:
            return None
        axes = observable.split('+')
        if any(axis not in PAULI_AXES for axis in axes):
            raise ValidationError('Observable must be a sum of x, y and z, e.g. "x+z".')
        return '+'.join(axes)

    def clean(self):
        cleaned_data = super().clean()
        if self.errors:
            return cleaned_data

        declared = cleaned_data.get('kind')
        if declared and self.kind and declared != self.kind:
            self.add_error('kind', f'Config declares {declared!r} but {self.kind!r} was requested.')
        cleaned_data['kind'] = self.kind or declared
        if not cleaned_data['kind']:
            raise ValidationError('No experiment kind given.')

        jy = cleaned_data.pop('jy', None)
        for name, default in config_defaults().items():
            if cleaned_data.get(name) in (None, '', [], ()):
                cleaned_data[name] = default

        if jy is not None:
            # Jy = Jx + 2 g gamma
            derived = (jy - cleaned_data['jx']) / 2.0
            if 'g' in self.data and abs(derived - cleaned_data['g']) > 1e-12:
                self.add_error('jy', f'model.jy implies g = {derived}, which contradicts model.g.')
            cleaned_data['g'] = derived

        kind = cleaned_data['kind']
        for name in REQUIRED_SWEEPS.get(kind, ()):
            if not cleaned_data[name]:
                self.add_error(name, f'{kind} needs this sweep.')
        if kind == 'meanfield-phase' and bool(cleaned_data['g_values']) == bool(cleaned_data['r_values']):
            raise ValidationError('meanfield-phase needs exactly one of sweep.g and sweep.r.')
        if kind in EXTRAPOLATING_KINDS and cleaned_data['r0'] <= 0:
            self.add_error('r0', f'{kind} extrapolates to zero noise and needs r0 > 0.')
        if len(cleaned_data['boosts']) < cleaned_data['order'] + 1 and kind in EXTRAPOLATING_KINDS:
            self.add_error('boosts', f'Order {cleaned_data["order"]} extrapolation needs '
                                     f'{cleaned_data["order"] + 1} boost factors.')
        if cleaned_data['boundary'] == 'periodic' and cleaned_data['size'] < PERIODIC_MIN_SIZE:
            self.add_error(
                'boundary', f'Periodic boundaries need L >= {PERIODIC_MIN_SIZE}, got L = {cleaned_data["size"]}.'
            )
        if cleaned_data['site'] >= cleaned_data['size'] ** 2:
            self.add_error('site', f'Site {cleaned_data["site"]} is outside the lattice.')
        if cleaned_data['signed'] and cleaned_data['noise_kind'] != 'random-pauli':
            self.add_error('signed', 'Signed mixtures only exist for random-Pauli noise.')
        return cleaned_data
