"""Griffith crack growth in periodic two-phase laminates under anti-plane shear."""

__version__ = "0.1.0"

from .materials import (ClosedFormNotApplicable, HomogenizedModel, LaminateSpec,
                        MaterialPhase, Orientation, effective_toughness_closed_form,
                        homogenized_model, homogenized_spec, ref1, stiffness_at,
                        toughness_at)
from .mesh import (CrackedMesh, CustomDatum, MeshError, MeshParams, PaperStep,
                   admissible_tips, boundary_datum, build_mesh)
from .elastic import (DisplacementField, EnergySample, SolverError, condensed_energy,
                      energy_at, energy_curve, solve)
from .release import (ReleaseCurve, Source, canonical_profile, holder_check,
                      release_curve, release_domain_integral, release_fd_oracle)
from .evolution import (EvolutionTrace, LoadProgram, brute_force_evolve, energy_identity,
                        evolve, griffith_check, jump_cost, nonmonotone_wrap)
from .homogenization import (StudyConfig, compute_curves, effective_toughness_estimate,
                             evolution_convergence, gamma_liminf_ratio,
                             local_energy_convergence, rescale_verify, toughening_report)
