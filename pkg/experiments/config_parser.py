"""
Reader for experiment configuration files.

    # 2 x 2 lattice, Richardson over three boosts
    model.L = 2
    evolution.tau = 0.01 [1/gamma]
    noise.r0 = 0.01 [gamma]
    noise.boosts = 1, 1.5, 2
    sweep.g = 0.025:0.25:0.025

One ``key = value [unit]`` per line; ``#`` starts a comment. Ranges
``start:stop:step`` include stop, comma-separated values become lists.
"""

import hashlib
import json
import logging
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from django.core.exceptions import ValidationError

from evolution.trotter import EvolutionConfig
from noise.generators import NoiseModel
from xyz_model.model import ModelSpec

from .forms import ExperimentConfigForm

logger = logging.getLogger(__name__)

TIME_UNITS = ('1/gamma',)
RATE_UNITS = ('gamma',)

# config key -> (form field, accepted units)
CONFIG_KEYS = {
    'experiment.kind': ('kind', ()),
    'model.L': ('size', ()),
    'model.boundary': ('boundary', ()),
    'model.jx': ('jx', RATE_UNITS),
    'model.jy': ('jy', RATE_UNITS),
    'model.jz': ('jz', RATE_UNITS),
    'model.g': ('g', ()),
    'model.coordination': ('coordination', ()),
    'evolution.tau': ('tau', TIME_UNITS),
    'evolution.max_time': ('max_time', TIME_UNITS),
    'evolution.tolerance': ('tolerance', ()),
    'evolution.stride': ('stride', ()),
    'evolution.probe_window': ('probe_window', TIME_UNITS),
    'noise.kind': ('noise_kind', ()),
    'noise.r0': ('r0', RATE_UNITS),
    'noise.boosts': ('boosts', ()),
    'noise.loosened': ('loosened', ()),
    'noise.signed': ('signed', ()),
    'noise.seed': ('noise_seed', ()),
    'noise.normalize': ('normalize', ()),
    'mitigation.order': ('order', ()),
    'sweep.g': ('g_values', ()),
    'sweep.r': ('r_values', RATE_UNITS),
    'spectroscopy.observable': ('observable', ()),
    'spectroscopy.site': ('site', ()),
    'spectroscopy.modes': ('modes', ()),
    'critical.window': ('window', ()),
    'meanfield.magnus_order': ('magnus_order', ()),
    'seed': ('seed', ()),
}

LINE_PATTERN = re.compile(
    r'^(?P<key>[A-Za-z_][\w.]*)\s*=\s*(?P<value>[^\[\]]*?)\s*(?:\[(?P<unit>[^\[\]]*)\])?$'
)
RANGE_DIGITS = 12


def expand_range(text):
    """
    ``start:stop:step`` as a list of floats, stop included when it lies on
    the grid.
    """
    try:
        start, stop, step = (float(part) for part in text.split(':'))
    except ValueError:
        raise ValidationError(f'Malformed range {text!r}; expected start:stop:step.') from None
    if step == 0 or (stop - start) * step < 0:
        raise ValidationError(f'Range {text!r} never reaches its stop value.')
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + k * step, RANGE_DIGITS) for k in range(count)]


@dataclass
class ParsedConfig:
    """
    Raw values keyed by form field, and where each came from.
    """

    values: dict = field(default_factory=dict)
    locations: dict = field(default_factory=dict)
    text: str = ''

    def describe(self, name):
        if name in self.locations:
            line, key = self.locations[name]
            return f'line {line} ({key})'
        return 'config'


def parse_config(text):
    """
    Split configuration text into raw values.

    Raises:
        ValidationError: malformed line, unknown or repeated key, unit that
            the key does not accept; the message names the line
    """
    parsed = ParsedConfig(text=text)
    errors = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        match = LINE_PATTERN.match(line)
        if match is None:
            errors.append(f'line {number}: expected "key = value [unit]", got {raw.strip()!r}')
            continue
        key, value, unit = match.group('key'), match.group('value').strip(), match.group('unit')
        if key not in CONFIG_KEYS:
            errors.append(f'line {number} ({key}): unknown key')
            continue
        name, units = CONFIG_KEYS[key]
        if name in parsed.values:
            first = parsed.locations[name][0]
            errors.append(f'line {number} ({key}): repeated key, first set on line {first}')
            continue
        if unit is not None and unit.strip() not in units:
            accepted = ', '.join(units) or 'none'
            errors.append(f'line {number} ({key}): unit [{unit.strip()}] not accepted (accepted: {accepted})')
            continue
        if not value:
            errors.append(f'line {number} ({key}): missing value')
            continue
        try:
            if ':' in value:
                value = expand_range(value)
            elif ',' in value:
                value = [item.strip() for item in value.split(',') if item.strip()]
        except ValidationError as exc:
            errors.append(f'line {number} ({key}): {exc.messages[0]}')
            continue
        parsed.values[name] = value
        parsed.locations[name] = (number, key)
    if errors:
        raise ValidationError(errors)
    return parsed


@dataclass(frozen=True)
class ExperimentConfig:
    """
    A validated experiment: model, evolution, noise and sweep settings with
    every default filled in.
    """

    kind: str
    size: int
    boundary: str
    jx: float
    jz: float
    g: float
    coordination: int
    tau: float
    max_time: float
    tolerance: float
    stride: int
    probe_window: float
    noise_kind: str
    r0: float
    boosts: tuple
    loosened: bool
    signed: bool
    noise_seed: int
    normalize: bool
    order: int
    g_values: tuple
    r_values: tuple
    observable: str
    site: int
    modes: int
    window: tuple
    magnus_order: int
    seed: int
    text: str = field(default='', compare=False, repr=False)

    def as_dict(self):
        """Canonical, JSON-ready form (the source text is left out)."""
        data = asdict(self)
        data.pop('text')
        return {key: list(value) if isinstance(value, tuple) else value for key, value in data.items()}

    @property
    def config_hash(self):
        canonical = json.dumps(self.as_dict(), sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()

    def model_spec(self, g=None):
        return ModelSpec.from_settings(
            self.size, g=self.g if g is None else g, boundary=self.boundary, jx=self.jx, jz=self.jz
        )

    def noise_model(self):
        return NoiseModel(self.noise_kind, self.loosened, self.signed, self.noise_seed, self.normalize)

    def evolution_config(self, r=None):
        return EvolutionConfig(
            tau=self.tau,
            r=self.r0 if r is None else r,
            max_time=self.max_time,
            tolerance=self.tolerance,
            record_stride=self.stride,
            probe_window=self.probe_window,
        )

    @property
    def boosted_rs(self):
        return tuple(c * self.r0 for c in self.boosts)

    @property
    def meanfield_options(self):
        return {'coordination': self.coordination, 'magnus_order': self.magnus_order, 'tau': self.tau}


def load_config(text, kind, seed=None):
    """
    Parse and validate configuration text for one experiment kind.

    ``seed`` (the --seed flag) overrides the file's seed.

    Raises:
        ValidationError: every problem found, each prefixed by its line and key
    """
    parsed = parse_config(text)
    form = ExperimentConfigForm(parsed.values, kind=kind)
    if not form.is_valid():
        messages = [
            f'{parsed.describe(name)}: {message}'
            for name, field_errors in form.errors.items()
            for message in field_errors
        ]
        raise ValidationError(messages)
    cleaned = dict(form.cleaned_data)
    if seed is not None:
        cleaned['seed'] = int(seed)
    values = {name: cleaned[name] for name in ExperimentConfig.__dataclass_fields__ if name in cleaned}
    config = ExperimentConfig(text=text, **values)
    logger.debug(f'Loaded {kind} config {config.config_hash[:12]}')
    return config


def load_config_file(path, kind, seed=None):
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as exc:
        raise ValidationError(f'Cannot read config file {path}: {exc.strerror}') from None
    return load_config(text, kind, seed)
