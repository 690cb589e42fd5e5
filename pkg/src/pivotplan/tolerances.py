"""Numerical tolerances shared across the package."""

#: Input validation (unit norms, orthonormality, scenario checks).
VALIDATION_TOL = 1e-8

#: Post-operation self checks.
ASSERT_TOL = 1e-10

#: Rotation angles below this (rad) are treated as no rotation.
ANGLE_TOL = 1e-8

#: Translations below this (m) are treated as zero.
LINEAR_TOL = 1e-10

#: Largest screw translation (m) still counted as a pure rotation.
PITCH_TOL = 1e-9

#: Distance (m) under which an object vertex counts as touching the support.
CONTACT_TOL = 1e-6

#: Fixed-point coincidence between two poses (m).
COINCIDENCE_TOL = 1e-6
