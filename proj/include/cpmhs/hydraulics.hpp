#pragma once

namespace cpmhs {

inline constexpr double kJoulesPerGwh = 3.6e12;

/// Potential energy expressed in both joules and GWh (gwh = joules / 3.6e12
/// exactly by construction).
struct EnergyEstimate {
    double joules = 0.0;
    double gwh = 0.0;

    static EnergyEstimate from_joules(double joules);

    bool operator==(const EnergyEstimate&) const = default;
};

/// Electrical power produced by a turbine passing flow q under head h:
/// eta_t * rho * g * h * q, in watts.
/// Throws std::domain_error when head_m <= 0, the efficiency is outside
/// (0,1], or any other argument is out of domain.
double generation_power(double eta_turbine, double rho, double g, double head_m,
                        double q_turbine_m3s);

/// Pump flow rate moved uphill by charging power p: eta_p * p / (rho*g*h),
/// in m^3/s. Domain errors as for generation_power.
double pumping_flow(double eta_pump, double rho, double g, double head_m,
                    double p_charge_w);

/// Turbine flow required to produce target_power_w; exact algebraic inverse
/// of generation_power.
double flow_for_power(double eta_turbine, double rho, double g, double head_m,
                      double target_power_w);

/// Energy recoverable by releasing volume V through head h: eta*rho*g*h*V.
/// Throws std::domain_error on negative volume or non-positive head.
EnergyEstimate potential_energy(double eta, double rho, double g, double head_m,
                                double volume_m3);

} // namespace cpmhs
