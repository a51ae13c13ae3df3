#pragma once

// Flat key=value configuration with dotted namespaces.  Every tunable
// parameter has a baked-in default; overrides arrive as "key=value"
// strings and unknown keys are rejected so typos cannot silently fall
// back to defaults.

#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "heraldsim/channel.hpp"
#include "heraldsim/csv.hpp"
#include "heraldsim/decoherence.hpp"
#include "heraldsim/readout.hpp"
#include "heraldsim/source.hpp"

namespace heraldsim {

class Config {
public:
    Config() {
        // emission and branching
        set_default("source.eta_q", "0.43");
        set_default("source.eta_h", "0.34");
        set_default("source.eta_q_given_h", "0.68");
        set_default("source.f_heralded", "0.87");
        set_default("source.f_all", "0.65");
        set_default("source.f_nonresonant", "0.29");
        set_default("source.tau_herald_ns", "50");
        set_default("source.tau_delay_ns", "30");
        // storage
        set_default("decoherence.larmor_freq_hz", "200000");
        set_default("decoherence.tau_dephase_us", "206");
        // photonic channel and gating; gate_offset_ns=auto centres a fixed
        // gate on the arrival peak and starts a referenced gate at the herald
        set_default("channel.attenuation_db_per_km", "0.2");
        set_default("channel.length_km", "0");
        set_default("channel.noise_rate_hz", "10");
        set_default("channel.gate_width_ns", "400");
        set_default("channel.herald_referenced", "false");
        set_default("channel.gate_offset_ns", "auto");
        // state detection
        set_default("readout.bright_rate_per_us", format_double(20.0 / 7.5));
        set_default("readout.dark_mean_at_ref", "0.2");
        set_default("readout.duration_us", "7.5");
        set_default("readout.threshold", "2");
        set_default("readout.heating_tau_us", "0");
        // microwave pulse chain
        set_default("chain.rabi_omega", format_double(std::numbers::pi / 10.0));
        set_default("chain.pi_contrast", "0.95");
        set_default("chain.basis_contrast", "0.96");
        set_default("chain.full_error_on_mw", "true");
        // reconstruction
        set_default("tomography.resamples", "200");
        set_default("tomography.chain", "ideal");
        // sweep shapes
        set_default("readout_scan.max_us", "10");
        set_default("readout_scan.step_us", "0.5");
        set_default("timing.max_ns", "200");
        set_default("timing.bin_ns", "4");
        set_default("delay_scan.max_us", "400");
        set_default("delay_scan.step_us", "20");
        set_default("noise_scan.points", "25");
        set_default("noise_scan.min_hz", "10000");
        set_default("noise_scan.max_hz", "100000000");
        set_default("noise_scan.fixed_gate_ns", "400");
        set_default("noise_scan.referenced_gate_ns", "40");
        set_default("rabi_scan.max_us", "20");
        set_default("rabi_scan.step_us", "0.25");
        set_default("precession_scan.max_us", "12.5");
        set_default("precession_scan.step_us", "0.25");
    }

    // Apply one "key=value" assignment; the key must already exist.
    void apply(std::string_view assignment) {
        const std::size_t eq = assignment.find('=');
        if (eq == std::string_view::npos || eq == 0)
            throw std::invalid_argument("Config: expected key=value, got '" +
                                        std::string(assignment) + "'");
        const std::string key(assignment.substr(0, eq));
        const std::string value(assignment.substr(eq + 1));
        for (auto& [k, v] : values_)
            if (k == key) {
                v = value;
                return;
            }
        throw std::invalid_argument("Config: unknown key '" + key + "'");
    }

    const std::string& get_string(std::string_view key) const {
        for (const auto& [k, v] : values_)
            if (k == key) return v;
        throw std::invalid_argument("Config: unknown key '" + std::string(key) + "'");
    }

    double get_double(std::string_view key) const {
        try {
            return parse_double(get_string(key));
        } catch (const std::invalid_argument&) {
            throw std::invalid_argument("Config: key '" + std::string(key) +
                                        "' is not a number: '" + get_string(key) + "'");
        }
    }

    std::int64_t get_int(std::string_view key) const {
        const double v = get_double(key);
        const auto i = static_cast<std::int64_t>(v);
        if (static_cast<double>(i) != v)
            throw std::invalid_argument("Config: key '" + std::string(key) +
                                        "' is not an integer");
        return i;
    }

    bool get_bool(std::string_view key) const {
        const std::string& v = get_string(key);
        if (v == "true" || v == "1") return true;
        if (v == "false" || v == "0") return false;
        throw std::invalid_argument("Config: key '" + std::string(key) +
                                    "' is not a boolean: '" + v + "'");
    }

    // Ordered key/value pairs for the metadata sidecar.
    const std::vector<std::pair<std::string, std::string>>& snapshot() const {
        return values_;
    }

private:
    void set_default(std::string key, std::string value) {
        values_.emplace_back(std::move(key), std::move(value));
    }

    std::vector<std::pair<std::string, std::string>> values_;
};

inline SourceParams build_source_params(const Config& cfg) {
    SourceParams sp;
    sp.eta_q = cfg.get_double("source.eta_q");
    sp.eta_h = cfg.get_double("source.eta_h");
    sp.eta_q_given_h = cfg.get_double("source.eta_q_given_h");
    sp.f_heralded = cfg.get_double("source.f_heralded");
    sp.f_all = cfg.get_double("source.f_all");
    sp.f_nonresonant = cfg.get_double("source.f_nonresonant");
    sp.tau_herald_ns = cfg.get_double("source.tau_herald_ns");
    sp.tau_delay_ns = cfg.get_double("source.tau_delay_ns");
    sp.validate();
    return sp;
}

inline DecoherenceParams build_decoherence_params(const Config& cfg) {
    DecoherenceParams dp;
    dp.larmor_freq_hz = cfg.get_double("decoherence.larmor_freq_hz");
    dp.tau_dephase_us = cfg.get_double("decoherence.tau_dephase_us");
    dp.validate();
    return dp;
}

inline ChannelParams build_channel_params(const Config& cfg, const SourceParams& sp) {
    const double width = cfg.get_double("channel.gate_width_ns");
    ChannelParams cp = cfg.get_bool("channel.herald_referenced")
                           ? herald_referenced_defaults(width)
                           : fixed_gate_defaults(sp, width);
    cp.attenuation_db_per_km = cfg.get_double("channel.attenuation_db_per_km");
    cp.length_km = cfg.get_double("channel.length_km");
    cp.noise_rate_hz = cfg.get_double("channel.noise_rate_hz");
    if (cfg.get_string("channel.gate_offset_ns") != "auto")
        cp.gate_offset_ns = cfg.get_double("channel.gate_offset_ns");
    cp.validate();
    return cp;
}

inline ReadoutParams build_readout_params(const Config& cfg) {
    ReadoutParams rp;
    rp.bright_rate_per_us = cfg.get_double("readout.bright_rate_per_us");
    rp.dark_mean_at_ref = cfg.get_double("readout.dark_mean_at_ref");
    rp.duration_us = cfg.get_double("readout.duration_us");
    rp.threshold = static_cast<int>(cfg.get_int("readout.threshold"));
    rp.heating_tau_us = cfg.get_double("readout.heating_tau_us");
    rp.validate();
    return rp;
}

inline ReadoutChain build_readout_chain(const Config& cfg) {
    ReadoutChain chain;
    const double omega = cfg.get_double("chain.rabi_omega");
    chain.pi_transfer = RabiParams{omega, cfg.get_double("chain.pi_contrast"),
                                   Transition::i_up};
    chain.basis_pulse = RabiParams{omega, cfg.get_double("chain.basis_contrast"),
                                   Transition::i_down};
    chain.detection = build_readout_params(cfg);
    chain.full_error_on_mw = cfg.get_bool("chain.full_error_on_mw");
    chain.validate();
    return chain;
}

}  // namespace heraldsim
