"""Human-readable and JSON reports.

The JSON body follows the ``{'success': ..., 'data': ...}`` payload shape;
keys are sorted and nothing time-dependent is recorded, so two runs with the
same config and seed produce identical bodies.
"""
import json
import math
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

from .errors import EXIT_CHECK_FAILED, EXIT_OK
from .expr import format_expression


def _clean(value):
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.ndarray):
        return _clean(value.tolist())
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


@dataclass
class Report:
    command: str
    system: str
    seed: int
    sections: Dict[str, dict] = field(default_factory=dict)
    lines: List[str] = field(default_factory=list)
    failures: List[str] = field(default_factory=list)

    @property
    def success(self):
        return not self.failures

    @property
    def exit_code(self):
        return EXIT_OK if self.success else EXIT_CHECK_FAILED

    def add(self, section, data, *lines):
        self.sections[section] = data
        if lines:
            self.lines.append(f'[{section}]')
            self.lines.extend(f'  {line}' for line in lines)

    def fail(self, reason):
        self.failures.append(str(reason))

    def payload(self):
        return _clean({
            'success': self.success,
            'command': self.command,
            'system': self.system,
            'seed': self.seed,
            'failures': self.failures,
            'data': self.sections,
        })

    def to_json(self):
        return json.dumps(self.payload(), sort_keys=True, indent=2)

    def to_text(self):
        status = 'ok' if self.success else 'FAILED: ' + '; '.join(self.failures)
        header = f'{self.command} {self.system} (seed {self.seed}): {status}'
        return '\n'.join([header] + self.lines)


def describe_invariants(inv):
    entries = []
    for entry in inv:
        entries.append({
            'k': entry.k,
            'name': entry.name,
            'expression': format_expression(entry.expression) if entry.symbolic else None,
            'trivial': entry.trivial,
        })
    return {
        'path': inv.path,
        'half_rank': inv.half_rank,
        'normalization': inv.normalization,
        'representative_dependence': inv.representative_dependence,
        'entries': entries,
    }


def invariant_lines(inv):
    lines = [f'path {inv.path}, half-rank {inv.half_rank}', inv.normalization]
    for entry in inv:
        shown = format_expression(entry.expression) if entry.symbolic else '<pointwise>'
        flag = ' (trivial)' if entry.trivial else ''
        lines.append(f'{entry.name} = {shown}{flag}')
    return lines


def table_lines(names, rows, fmt='{:.6e}'):
    lines = ['  '.join(f'{n:>14}' for n in names)]
    for row in rows:
        lines.append('  '.join(f'{fmt.format(v):>14}' for v in row))
    return lines
