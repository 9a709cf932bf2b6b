// Generated by gen_symbolic_jacobians.py. Do not edit.
#pragma once

#include <cmath>

namespace oracle {

using std::cos;
using std::sin;

// Row-major 12x12: I + dt * df/dx at state s and squared rotor speeds u.
inline void transition_jacobian(const double* s, const double* u, double m, double g, double Ix, double Iy, double Iz, double l, double b, double d, double dt, double* out) {
  const double phi = s[0], theta = s[1], psi = s[2], dphi = s[3], dtheta = s[4], dpsi = s[5], x = s[6], y = s[7], z = s[8], vx = s[9], vy = s[10], vz = s[11];
  const double w1 = u[0], w2 = u[1], w3 = u[2], w4 = u[3];
  (void)g; (void)l; (void)d; (void)x; (void)y; (void)z; (void)vx; (void)vy; (void)vz;
  const double x0 = dpsi*dt;
  const double x1 = -Iz;
  const double x2 = (Iy + x1)/Ix;
  const double x3 = dt*dtheta;
  const double x4 = (-Ix - x1)/Iy;
  const double x5 = dphi*dt;
  const double x6 = (Ix - Iy)/Iz;
  const double x7 = sin(psi);
  const double x8 = cos(phi);
  const double x9 = sin(theta);
  const double x10 = sin(phi);
  const double x11 = cos(psi);
  const double x12 = x10*x11;
  const double x13 = b*dt*(w1 + w2 + w3 + w4)/m;
  const double x14 = x11*x8;
  const double x15 = x13*cos(theta);
  const double x16 = x7*x8;
  const double x17 = x10*x7;
  out[0] = 1;
  out[1] = 0;
  out[2] = 0;
  out[3] = dt;
  out[4] = 0;
  out[5] = 0;
  out[6] = 0;
  out[7] = 0;
  out[8] = 0;
  out[9] = 0;
  out[10] = 0;
  out[11] = 0;
  out[12] = 0;
  out[13] = 1;
  out[14] = 0;
  out[15] = 0;
  out[16] = dt;
  out[17] = 0;
  out[18] = 0;
  out[19] = 0;
  out[20] = 0;
  out[21] = 0;
  out[22] = 0;
  out[23] = 0;
  out[24] = 0;
  out[25] = 0;
  out[26] = 1;
  out[27] = 0;
  out[28] = 0;
  out[29] = dt;
  out[30] = 0;
  out[31] = 0;
  out[32] = 0;
  out[33] = 0;
  out[34] = 0;
  out[35] = 0;
  out[36] = 0;
  out[37] = 0;
  out[38] = 0;
  out[39] = 1;
  out[40] = x0*x2;
  out[41] = x2*x3;
  out[42] = 0;
  out[43] = 0;
  out[44] = 0;
  out[45] = 0;
  out[46] = 0;
  out[47] = 0;
  out[48] = 0;
  out[49] = 0;
  out[50] = 0;
  out[51] = x0*x4;
  out[52] = 1;
  out[53] = x4*x5;
  out[54] = 0;
  out[55] = 0;
  out[56] = 0;
  out[57] = 0;
  out[58] = 0;
  out[59] = 0;
  out[60] = 0;
  out[61] = 0;
  out[62] = 0;
  out[63] = x3*x6;
  out[64] = x5*x6;
  out[65] = 1;
  out[66] = 0;
  out[67] = 0;
  out[68] = 0;
  out[69] = 0;
  out[70] = 0;
  out[71] = 0;
  out[72] = 0;
  out[73] = 0;
  out[74] = 0;
  out[75] = 0;
  out[76] = 0;
  out[77] = 0;
  out[78] = 1;
  out[79] = 0;
  out[80] = 0;
  out[81] = dt;
  out[82] = 0;
  out[83] = 0;
  out[84] = 0;
  out[85] = 0;
  out[86] = 0;
  out[87] = 0;
  out[88] = 0;
  out[89] = 0;
  out[90] = 0;
  out[91] = 1;
  out[92] = 0;
  out[93] = 0;
  out[94] = dt;
  out[95] = 0;
  out[96] = 0;
  out[97] = 0;
  out[98] = 0;
  out[99] = 0;
  out[100] = 0;
  out[101] = 0;
  out[102] = 0;
  out[103] = 0;
  out[104] = 1;
  out[105] = 0;
  out[106] = 0;
  out[107] = dt;
  out[108] = x13*(-x12*x9 + x7*x8);
  out[109] = x14*x15;
  out[110] = x13*(x12 - x16*x9);
  out[111] = 0;
  out[112] = 0;
  out[113] = 0;
  out[114] = 0;
  out[115] = 0;
  out[116] = 0;
  out[117] = 1;
  out[118] = 0;
  out[119] = 0;
  out[120] = x13*(-x14 - x17*x9);
  out[121] = x15*x16;
  out[122] = x13*(x14*x9 + x17);
  out[123] = 0;
  out[124] = 0;
  out[125] = 0;
  out[126] = 0;
  out[127] = 0;
  out[128] = 0;
  out[129] = 0;
  out[130] = 1;
  out[131] = 0;
  out[132] = x10*x15;
  out[133] = x13*x8*x9;
  out[134] = 0;
  out[135] = 0;
  out[136] = 0;
  out[137] = 0;
  out[138] = 0;
  out[139] = 0;
  out[140] = 0;
  out[141] = 0;
  out[142] = 0;
  out[143] = 1;
}

// Row-major 6x6 Jacobian of the IMU map at attitude a.
inline void imu_jacobian(const double* a, double* out) {
  const double phi = a[0], theta = a[1], psi = a[2], dphi = a[3], dtheta = a[4], dpsi = a[5];
  (void)psi; (void)dphi;
  const double x0 = cos(theta);
  const double x1 = dpsi*x0;
  const double x2 = sin(theta);
  const double x3 = sin(phi);
  const double x4 = cos(phi);
  const double x5 = dpsi*x2;
  out[0] = 1;
  out[1] = 0;
  out[2] = 0;
  out[3] = 0;
  out[4] = 0;
  out[5] = 0;
  out[6] = 0;
  out[7] = 1;
  out[8] = 0;
  out[9] = 0;
  out[10] = 0;
  out[11] = 0;
  out[12] = 0;
  out[13] = 0;
  out[14] = 1;
  out[15] = 0;
  out[16] = 0;
  out[17] = 0;
  out[18] = 0;
  out[19] = -x1;
  out[20] = 0;
  out[21] = 1;
  out[22] = 0;
  out[23] = -x2;
  out[24] = -dtheta*x3 + x1*x4;
  out[25] = -x3*x5;
  out[26] = 0;
  out[27] = 0;
  out[28] = x4;
  out[29] = x0*x3;
  out[30] = -dtheta*x4 - x1*x3;
  out[31] = -x4*x5;
  out[32] = 0;
  out[33] = 0;
  out[34] = -x3;
  out[35] = x0*x4;
}

}  // namespace oracle
