#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>

// Modified Bessel function of the second kind, order zero.
// Minimax rational approximations on (0,1] and (1,inf), coefficients from
// Russon and Blair, Chalk River Report AECL-3461, 1969. Absolute error is
// well below 1e-14 over the range used by the detection model.

namespace pursuit {

namespace detail {

template <std::size_t N>
inline double eval_poly(const double (&c)[N], double x) {
    double r = c[N - 1];
    for (std::size_t k = N - 1; k-- > 0;) r = r * x + c[k];
    return r;
}

} // namespace detail

inline double bessel_k0(double x) {
    if (!(x > 0.0)) throw std::domain_error("bessel_k0: requires x > 0");

    static const double P1[] = {
        2.4708152720399552679e+03, 5.9169059852270512312e+03, 4.6850901201934832188e+02,
        1.1999463724910714109e+01, 1.3166052564989571850e-01, 5.8599221412826100000e-04};
    static const double Q1[] = {2.1312714303849120380e+04, -2.4994418972832303646e+02, 1.0};
    static const double P2[] = {
        -1.6128136304458193998e+06, -3.7333769444840079748e+05, -1.7984434409411765813e+04,
        -2.9501657892958843865e+02, -1.6414452837299064100e+00};
    static const double Q2[] = {
        -1.6128136304458193998e+06, 2.9865713163054025489e+04, -2.5064972445877992730e+02, 1.0};
    static const double P3[] = {
        1.1600249425076035558e+02, 2.3444738764199315021e+03, 1.8321525870183537725e+04,
        7.1557062783764037541e+04, 1.5097646353289914539e+05, 1.7398867902565686251e+05,
        1.0577068948034021957e+05, 3.1075408980684392399e+04, 3.6832589957340267940e+03,
        1.1394980557384778174e+02};
    static const double Q3[] = {
        9.2556599177304839811e+01, 1.8821890840982713696e+03, 1.4847228371802360957e+04,
        5.8824616785857027752e+04, 1.2689839587977598727e+05, 1.5144644673520157801e+05,
        9.7418829762268075784e+04, 3.1474655750295278825e+04, 4.4329628889746408858e+03,
        2.0013443064949242491e+02, 1.0};

    if (x <= 1.0) {
        double y = x * x;
        double r1 = detail::eval_poly(P1, y) / detail::eval_poly(Q1, y);
        double r2 = detail::eval_poly(P2, y) / detail::eval_poly(Q2, y);
        return r1 - std::log(x) * r2;
    }
    double y = 1.0 / x;
    double r = detail::eval_poly(P3, y) / detail::eval_poly(Q3, y);
    return std::exp(-x) / std::sqrt(x) * r;
}

} // namespace pursuit
