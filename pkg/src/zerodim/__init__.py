"""Exact finite-resolution dynamics on zero-dimensional compact metric spaces."""

from .space import (Atom, Cylinder, FiniteModel, Interval, ScaledCantor, as_scalar, atom_metric,
                    cylinder_model, interval_model, threshold_grid, validate_partition)
from .systems import (SwapInvolution, SystemFamily, SystemLevel, build_identity, build_odometer,
                      build_paper_example, embed_binary_odometer, perturb, swap_homeomorphism,
                      system_distance, system_power)
from .chain import (build_chain_graph, chain_components, chain_recurrent_atoms, cyclic_decomposition,
                    r_delta, verify_cyclic_properties)
from .shadowing import (check_periodic_shadowing, check_shadowing, classify_orbit_closure,
                        continuous_shadowing_construct, equicontinuity_modulus, find_delta)
from .stability import build_conjugating_map, stability_probe, verify_semiconjugacy
