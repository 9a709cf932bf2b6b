"""Generate symbolic_jacobians.hpp: closed-form Jacobians of the rigid-body
model and of the IMU map, derived with sympy from the equations of motion.
The tests compare the library's finite-difference Jacobians against these.

    python3 tests/oracles/gen_symbolic_jacobians.py > tests/oracles/symbolic_jacobians.hpp
"""
import sympy as sp

phi, theta, psi, dphi, dtheta, dpsi, x, y, z, vx, vy, vz = sp.symbols(
    "phi theta psi dphi dtheta dpsi x y z vx vy vz")
state = [phi, theta, psi, dphi, dtheta, dpsi, x, y, z, vx, vy, vz]
w1, w2, w3, w4 = sp.symbols("w1 w2 w3 w4")
m, g, Ix, Iy, Iz, l, b, d, dt = sp.symbols("m g Ix Iy Iz l b d dt")

F = b * (w1 + w2 + w3 + w4)
tx = b * l * (w4 - w2)
ty = b * l * (w1 - w3)
tz = d * (-w1 + w2 - w3 + w4)

f = sp.Matrix([
    dphi, dtheta, dpsi,
    (Iy - Iz) / Ix * dtheta * dpsi + tx / Ix,
    (Iz - Ix) / Iy * dphi * dpsi + ty / Iy,
    (Ix - Iy) / Iz * dtheta * dphi + tz / Iz,
    vx, vy, vz,
    F / m * (sp.cos(phi) * sp.sin(theta) * sp.cos(psi) + sp.sin(phi) * sp.sin(psi)),
    F / m * (sp.cos(phi) * sp.sin(theta) * sp.sin(psi) - sp.sin(phi) * sp.cos(psi)),
    g - F / m * sp.cos(phi) * sp.cos(theta),
])
A = sp.eye(12) + dt * f.jacobian(state)

att = [phi, theta, psi, dphi, dtheta, dpsi]
h = sp.Matrix([
    phi, theta, psi,
    dphi - sp.sin(theta) * dpsi,
    sp.cos(phi) * dtheta + sp.sin(phi) * sp.cos(theta) * dpsi,
    -sp.sin(phi) * dtheta + sp.cos(phi) * sp.cos(theta) * dpsi,
])
H = h.jacobian(att)


def emit(name, args, unpack, mat):
    n, k = mat.shape
    subs, exprs = sp.cse(list(mat))
    lines = [f"inline void {name}({args}, double* out) {{"]
    lines += [f"  {u}" for u in unpack]
    lines += [f"  const double {s} = {sp.ccode(e)};" for s, e in subs]
    for i, e in enumerate(exprs):
        lines.append(f"  out[{i}] = {sp.ccode(e)};")
    lines.append("}")
    return "\n".join(lines)


print("// Generated by gen_symbolic_jacobians.py. Do not edit.")
print("#pragma once\n\n#include <cmath>\n\nnamespace oracle {\n")
print("using std::cos;\nusing std::sin;\n")
print("// Row-major 12x12: I + dt * df/dx at state s and squared rotor speeds u.")
print(emit("transition_jacobian",
           "const double* s, const double* u, double m, double g, double Ix, double Iy, "
           "double Iz, double l, double b, double d, double dt",
           ["const double " + ", ".join(f"{v} = s[{i}]" for i, v in enumerate(state)) + ";",
            "const double w1 = u[0], w2 = u[1], w3 = u[2], w4 = u[3];",
            "(void)g; (void)l; (void)d; (void)x; (void)y; (void)z; (void)vx; (void)vy; (void)vz;"],
           A))
print()
print("// Row-major 6x6 Jacobian of the IMU map at attitude a.")
print(emit("imu_jacobian", "const double* a",
           ["const double " + ", ".join(f"{v} = a[{i}]" for i, v in enumerate(att)) + ";",
            "(void)psi; (void)dphi;"],
           H))
print("\n}  // namespace oracle")
