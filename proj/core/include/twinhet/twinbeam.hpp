#pragma once

#include "twinhet/fock.hpp"

namespace twinhet {

class TwinBeamParams {
public:
    explicit TwinBeamParams(double lambda);
    double lambda() const { return lambda_; }
    double gain() const { return 1.0 / (1.0 - lambda_ * lambda_); }

private:
    double lambda_;
};

class DisplacedTwinBeamParams {
public:
    DisplacedTwinBeamParams(TwinBeamParams base, cplx w) : base_(base), w_(w) {}
    const TwinBeamParams& base() const { return base_; }
    double lambda() const { return base_.lambda(); }
    cplx w() const { return w_; }
    double theta() const;  // arg(w) in (-pi, pi]

private:
    TwinBeamParams base_;
    cplx w_;
};

// n_max >= ln(bound) / (2 ln lambda): the geometric photon tail falls below `bound`.
int tail_rule_n_max(double lambda, double bound = 1e-8);

KetState twin_beams(const TwinBeamParams& params, const Truncation& truncation);
KetState displaced_twin_beams(const DisplacedTwinBeamParams& params, const Truncation& truncation);

double mean_photons_closed_form(const DisplacedTwinBeamParams& params);
double mean_photons_numeric(const KetState& state);

DisplacedTwinBeamParams optimal_split(double n_bar, double phase = 0.0);

}  // namespace twinhet
