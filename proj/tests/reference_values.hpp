#pragma once

// Generated by tests/reference/make_reference.py (mpmath, 50 digits).

namespace ref {

struct BetaCase { double a, b, t, upper; };
inline constexpr BetaCase kBeta[] = {
    {7.1, 13.1, 0.2, 0.93537179347852453543},
    {7.1, 13.1, 0.3, 0.6717284541749206652},
    {0.1, 0.1, 0.5, 0.5},
    {0.6, 10.1, 0.05, 0.37683809987948646302},
    {25.1, 15.1, 0.7, 0.16082827108644101326},
    {3.5, 0.5, 0.99, 0.20202830476514908098},
    {13.1, 27.1, 0.3, 0.6230901671657412083},
};

struct ContinuousCase { int n; double mean, ss, t, upper; };
inline constexpr ContinuousCase kContinuous[] = {
    {10, 0.15, 9.0, 0.0, 0.68604449222503209911},
    {10, 0.15, 9.0, 0.1, 0.56450686891835311519},
    {40, 0.2, 39.0, 0.1, 0.73724620571427073897},
    {5, -0.3, 2.0, 0.0, 0.16871104004081554395},
    {20, 1.0, 80.0, 0.5, 0.86157970823629669713},
    {3, 0.05, 0.03, 0.1, 0.22500579228776636493},
};

struct TteCase { int d; double total, t, upper; };
inline constexpr TteCase kTte[] = {
    {5, 60.0, 6.0, 0.82066442607675593691},
    {5, 60.0, 8.0, 0.59363715821587519484},
    {20, 200.0, 6.0, 0.76882923703633351173},
    {1, 3.0, 10.0, 0.18774727584636471128},
    {30, 500.0, 12.0, 0.44204912024551603852},
};

struct DiffCase { double ae, be, ac, bc, t, upper; };
inline constexpr DiffCase kDifference[] = {
    {10.1, 20.1, 5.1, 20.1, 0.0, 0.87364116645850693914},
    {10.1, 20.1, 5.1, 20.1, 0.2, 0.28000644398786964632},
    {20.1, 30.1, 5.1, 20.1, 0.1, 0.82796805142946469928},
    {2.1, 8.1, 3.1, 7.1, -0.1, 0.50508479843024695921},
    {30.1, 20.1, 12.1, 13.1, 0.2, 0.25337712622011929074},
};

struct GraduateCase { double lambda; int n, max_n; double cutoff; };
inline constexpr GraduateCase kGraduate[] = {
    {0.9, 10, 40, 0.99899708333435903689},
    {0.9, 20, 40, 0.97999074628388197232},
    {0.95, 30, 75, 0.99805808700325914682},
    {0.5, 1, 40, 0.99998008554325626483},
    {0.99, 45, 75, 0.99911702321264892698},
};

struct QuantileCase { double p, z; };
inline constexpr QuantileCase kNormalQuantile[] = {
    {0.5, 0.0},
    {0.9, 1.2815515655446005935},
    {0.975, 1.9599639845400538556},
    {1e-06, -4.7534243088228989573},
    {0.999999, 4.7534243088170877657},
};

}  // namespace ref
