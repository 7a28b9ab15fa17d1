"""Pinned witness instances: the quaternion quotient and the degree-2
truncated Magnus quotient, plus small groups for oracle tests."""

from __future__ import annotations

import json
from dataclasses import dataclass

from . import magnus
from .cover import Surjection
from .errors import UsageError
from .groups import (cyclic_group, quaternion_group, symmetric3,
                     trivial_group, GroupTable)


@dataclass
class Preset:
    """A surjection plus (optionally) the central character data (C, Psi)."""

    name: str
    surjection: Surjection
    central: list | None = None
    psi: dict | None = None
    p: int | None = None
    magnus_group: object = None     # FiniteGroupTable for the Magnus preset
    phi: object = None

    @property
    def has_projector(self):
        return self.central is not None


def q8_preset() -> Preset:
    """F_2 onto the 8-element quaternion group, x1 -> i, x2 -> j.

    C is the center {1, -1}; Psi(-1) = 1 in Z/2.
    """
    table = quaternion_group()
    surj = Surjection(table, [2, 4], name="q8")
    return Preset(name="q8", surjection=surj, central=[0, 1],
                  psi={0: 0, 1: 1}, p=2)


def zassenhaus_preset(n=2, p=2, k=1, cap=1_000_000) -> Preset:
    """The truncated Magnus quotient G = image of F_n in degree-p^k units.

    C is the depth-p^k filtration subgroup, Psi = Phi(. - 1) with Phi the
    coefficient functional of the nonvanishing polynomial.
    """
    group = magnus.enumerate_group(n, p, k, cap=cap)
    table = group.to_group_table()
    surj = Surjection(table, group.gen_images, name=f"zassenhaus({n},{p},{k})")
    phi = magnus.build_phi(n, p, k)
    central, psi = magnus.psi_from_phi(group, phi)
    return Preset(name=f"zassenhaus({n},{p},{k})", surjection=surj,
                  central=central, psi=psi, p=p, magnus_group=group, phi=phi)


def small_preset(name) -> Preset:
    if name == "trivial":
        return Preset(name, Surjection(trivial_group(), [0, 0], name="trivial"))
    if name == "z2":
        return Preset(name, Surjection(cyclic_group(2), [1, 0], name="z2"))
    if name == "z3":
        return Preset(name, Surjection(cyclic_group(3), [1, 0], name="z3"))
    if name == "s3":
        table, gens = symmetric3()
        return Preset(name, Surjection(table, gens, name="s3"))
    raise UsageError(f"unknown preset {name}")


def surjection_from_file(path) -> Preset:
    """Custom surjection: JSON {"permutations": [[...], ...]} with one
    permutation (0-indexed one-line notation) per free generator."""
    with open(path) as fh:
        data = json.load(fh)
    perms = data.get("permutations")
    if not perms:
        raise UsageError("surjection file needs a 'permutations' list")
    from .groups import from_permutations
    table, gens = from_permutations([tuple(p) for p in perms])
    name = data.get("name", "custom")
    return Preset(name, Surjection(table, gens, origin="file", name=name))


def get_preset(name, **kwargs) -> Preset:
    if name == "q8":
        return q8_preset()
    if name == "zassenhaus":
        return zassenhaus_preset(kwargs.get("n", 2), kwargs.get("p", 2),
                                 kwargs.get("k", 1), kwargs.get("cap", 1_000_000))
    if name in ("trivial", "z2", "z3", "s3"):
        return small_preset(name)
    if name.endswith(".json"):
        return surjection_from_file(name)
    raise UsageError(f"unknown preset {name!r} "
                     "(expected q8, zassenhaus, z2, z3, s3, trivial, or a .json file)")
