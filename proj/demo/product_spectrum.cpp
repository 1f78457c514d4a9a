// Samples a product of iid matrices, checks the linearization against it and compares the
// hermitized spectrum at a shift outside the unit disk with the limiting density.
//
//   demo_product_spectrum [n] [N] [seed]

#include <cstdio>
#include <cstdlib>

#include "prodspec/experiments.hpp"
#include "prodspec/selfconsistent.hpp"
#include "prodspec/spectral.hpp"

using namespace prodspec;

int main(int argc, char** argv) {
    pin_blas_threads();
    const int n = argc > 1 ? std::atoi(argv[1]) : 2;
    const int N = argc > 2 ? std::atoi(argv[2]) : 200;
    const std::uint64_t seed = argc > 3 ? std::strtoull(argv[3], nullptr, 10) : 7;

    const auto chain = sample_chain(EnsembleSpec::make(n, N, EntryLaw::complex_gaussian, seed));
    const double radius = spectral_radius(build_product(chain));
    std::printf("n=%d N=%d  spectral radius of the product: %.4f\n", n, N, radius);

    const cplx z{1.5, 0.0};
    const auto sup = support_endpoints(z);
    const auto spec = hermitized_spectrum(build_linearization(chain, z));
    std::printf("z=1.5  support [%.4f, %.4f], smallest eigenvalue of (X-z)*(X-z): %.4f\n",
                sup.lambda_minus, sup.lambda_plus, spec.lambdas.front());

    const int bins = 12;
    const double hi = 1.25 * sup.lambda_plus;
    const auto hist = esd_histogram(spec, bins, 0.0, hi);
    const auto ref = reference_bin_masses(z, bins, 0.0, hi);
    std::printf("%10s %10s %10s\n", "bin", "empirical", "limit");
    for (int k = 0; k < bins; ++k)
        std::printf("%10.3f %10.4f %10.4f\n", hist[k].center, hist[k].mass, ref[k]);
    std::printf("total variation: %.4f\n", tv_distance(hist, ref));

    const cplx w{0.02, 0.3};
    const auto sol = solve_mc(z, w);
    std::printf("m(w) = %.5f%+.5fi   m_c(w) = %.5f%+.5fi\n", empirical_stieltjes(spec, w).real(),
                empirical_stieltjes(spec, w).imag(), sol.m_c.real(), sol.m_c.imag());
    return 0;
}
