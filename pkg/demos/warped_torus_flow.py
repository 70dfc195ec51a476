"""
Evolution equations on a warped torus
=====================================

Ricci flow of dx^2 + f(x)^2 dy^2 + h(x)^2 dz^2 with the pair of projections
for the (x, z) rotations carried along.  The algebra is not the holonomy
here (f is not constant), so Rm o Phat and nabla Phat are nonzero and the
evolution equations have something to show.
"""
from holoflow.flow import initial_state
from holoflow.verify import EQUATIONS, commutator_refinement, refinement_study
from holoflow.verify.experiments import explicit_subalgebra, load_scenario, system_series
from holoflow.verify.inequalities import check_inequalities

sc = load_scenario("warped-t3")
print("model:", sc.model)


def builder(N):
    geom = load_scenario("warped-t3", overrides={"resolution": N}).geometry()
    return initial_state(geom, explicit_subalgebra(geom.n, sc.H))


# Each residual compares differenced fields with the right-hand side.  The
# spatial part uses an exact derivative along the flow velocity, the
# temporal part is the one-step forward difference error.
levels = ((32, 1e-4), (64, 2.5e-5))
print(f"\n{'eq':5s} {'spatial 32':>11s} {'spatial 64':>11s} {'order':>6s} {'temporal order':>15s}")
for eq in EQUATIONS:
    out = refinement_study(eq, builder, levels=levels)
    sp, tm = out["spatial"], out["temporal"]
    print(f"{eq:5s} {sp.levels[0]:11.3e} {sp.levels[1]:11.3e} {sp.order:6.2f} {tm.order:15.2f}")

# Commuting D_t and the heat operator past nabla.
comm = commutator_refinement(builder, levels=levels)
for name, d in comm.items():
    sp = d["spatial"]
    order = "exact" if sp.order is None else f"order {sp.order:.2f}"
    print(f"commutator {name:6s} {sp.levels[-1]:.2e} ({order})")

# The heat part X = Rhat + That and the ODE part Y = A + B bound each other
# with a constant that settles under refinement.
for N in (32, 64):
    heat, ode = check_inequalities(system_series(sc, resolution=N, every=8))
    print(f"N={N}: C_heat = {heat.C:.3f}, C_ode = {ode.C:.3f}, |X(T)| = {heat.norms['X_T']:.3f}")
