#include "cpmhs/hydraulics.hpp"

#include <cmath>
#include <stdexcept>

namespace cpmhs {

namespace {

void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw std::domain_error(std::string(name) + " must be positive and finite");
    }
}

void require_non_negative(double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
        throw std::domain_error(std::string(name) + " must be non-negative and finite");
    }
}

void require_efficiency(double v, const char* name) {
    if (!(v > 0.0 && v <= 1.0)) {
        throw std::domain_error(std::string(name) + " must be in (0, 1]");
    }
}

} // namespace

EnergyEstimate EnergyEstimate::from_joules(double j) {
    return {j, j / kJoulesPerGwh};
}

double generation_power(double eta_turbine, double rho, double g, double head_m,
                        double q_turbine_m3s) {
    require_efficiency(eta_turbine, "eta_turbine");
    require_positive(rho, "rho");
    require_positive(g, "g");
    require_positive(head_m, "head_m");
    require_non_negative(q_turbine_m3s, "q_turbine_m3s");
    return eta_turbine * rho * g * head_m * q_turbine_m3s;
}

double pumping_flow(double eta_pump, double rho, double g, double head_m, double p_charge_w) {
    require_efficiency(eta_pump, "eta_pump");
    require_positive(rho, "rho");
    require_positive(g, "g");
    require_positive(head_m, "head_m");
    require_non_negative(p_charge_w, "p_charge_w");
    return eta_pump * p_charge_w / (rho * g * head_m);
}

double flow_for_power(double eta_turbine, double rho, double g, double head_m,
                      double target_power_w) {
    require_efficiency(eta_turbine, "eta_turbine");
    require_positive(rho, "rho");
    require_positive(g, "g");
    require_positive(head_m, "head_m");
    require_non_negative(target_power_w, "target_power_w");
    return target_power_w / (eta_turbine * rho * g * head_m);
}

EnergyEstimate potential_energy(double eta, double rho, double g, double head_m,
                                double volume_m3) {
    require_efficiency(eta, "eta");
    require_positive(rho, "rho");
    require_positive(g, "g");
    require_positive(head_m, "head_m");
    require_non_negative(volume_m3, "volume_m3");
    return EnergyEstimate::from_joules(eta * rho * g * head_m * volume_m3);
}

} // namespace cpmhs
