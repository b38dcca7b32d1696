#include "twinhet/twinbeam.hpp"

#include <cmath>
#include <string>

#include "twinhet/errors.hpp"

namespace twinhet {

TwinBeamParams::TwinBeamParams(double lambda) : lambda_(lambda) {
    if (!(lambda >= 0.0 && lambda < 1.0)) throw ValidationError("lambda must lie in [0, 1)");
}

double DisplacedTwinBeamParams::theta() const {
    double t = std::arg(w_);
    return t == -M_PI ? M_PI : t;
}

int tail_rule_n_max(double lambda, double bound) {
    if (lambda <= 0.0) return 0;
    return std::max(0, static_cast<int>(std::ceil(std::log(bound) / (2.0 * std::log(lambda)))));
}

KetState twin_beams(const TwinBeamParams& params, const Truncation& truncation) {
    if (truncation.n_modes() != 2) throw ValidationError("twin_beams: needs a two-mode truncation");
    const double lam = params.lambda();
    int needed = tail_rule_n_max(lam);
    try {
        Truncation probe(needed, 2);
        (void)probe;
    } catch (const CapacityError&) {
        throw CapacityError("twin_beams: lambda=" + std::to_string(lam) +
                            " needs n_max=" + std::to_string(needed) + ", beyond the memory cap");
    }
    CVector v = CVector::Zero(truncation.dim());
    const double norm = std::sqrt(1.0 - lam * lam);
    double amp = norm;
    for (int n = 0; n <= truncation.n_max(); ++n) {
        int occ[2] = {n, n};
        v(truncation.index(occ)) = amp;
        amp *= -lam;
    }
    double discarded = std::pow(lam, 2.0 * (truncation.n_max() + 1));
    return KetState(std::move(v), truncation, discarded);
}

KetState displaced_twin_beams(const DisplacedTwinBeamParams& params, const Truncation& truncation) {
    KetState base = twin_beams(params.base(), truncation);
    const double load = mean_photons_closed_form(params);
    std::vector<std::string> warnings;
    if (load > truncation.n_max() / 2.0)
        warnings.push_back("mean photon load " + std::to_string(load) + " exceeds n_max/2 = " +
                           std::to_string(truncation.n_max() / 2.0) + "; truncation distortion likely");
    if (params.w() == cplx(0)) {
        base.warnings = warnings;
        return base;
    }
    DenseOperator d = displacement(params.w(), 0, Truncation(truncation.n_max(), 1));
    CVector out = apply_single_mode(d.matrix(), 0, truncation, base.amplitudes());
    KetState s(std::move(out), truncation, base.discarded_mass());
    s.warnings = warnings;
    return s;
}

double mean_photons_closed_form(const DisplacedTwinBeamParams& params) {
    double l2 = params.lambda() * params.lambda();
    return std::norm(params.w()) + 2.0 * l2 / (1.0 - l2);
}

double mean_photons_numeric(const KetState& state) {
    const Truncation& t = state.truncation();
    if (t.n_modes() != 2) throw ValidationError("mean_photons_numeric: needs a two-mode state");
    RVector n = number_diagonal(t, 0) + number_diagonal(t, 1);
    const CVector& a = state.amplitudes();
    return (n.array() * a.cwiseAbs2().array()).sum() / a.squaredNorm();
}

DisplacedTwinBeamParams optimal_split(double n_bar, double phase) {
    if (!(n_bar > 2.0)) throw ValidationError("optimal_split: n_bar must exceed 2");
    double lam = 1.0 - 2.0 / n_bar;
    return DisplacedTwinBeamParams(TwinBeamParams(lam), std::polar(std::sqrt(n_bar / 2.0), phase));
}

}  // namespace twinhet
