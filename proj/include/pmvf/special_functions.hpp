#pragma once

namespace pmvf {

// Lower incomplete gamma gamma~(s; w) = int_0^w tau^{s-1} e^{-tau} dtau,
// unnormalized. Series expansion for w < s+1, continued fraction of the
// upper complement otherwise; relative accuracy ~1e-12.
double gamma_lower_incomplete(double s, double w);

// Lebesgue volume of the unit ball in R^m (m >= 0; omega_0 = 1).
double unit_ball_volume(int m);

}  // namespace pmvf
