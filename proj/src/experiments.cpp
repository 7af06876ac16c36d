#include "bsosim/experiments.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "bsosim/bso_scan.hpp"
#include "bsosim/channel.hpp"
#include "bsosim/closed_form.hpp"
#include "bsosim/csv.hpp"
#include "bsosim/floquet.hpp"
#include "bsosim/locking.hpp"
#include "bsosim/protocol.hpp"
#include "bsosim/pulse.hpp"
#include "bsosim/two_level.hpp"

namespace bsosim {

namespace {

using json = nlohmann::json;

const std::map<Experiment, std::map<std::string, std::string>> kDefaults = {
    {Experiment::BsoScan,
     {{"eta", "0.02"},
      {"omega", "1"},
      {"phases", "32"},
      {"tau_sw_mult", "6"},
      {"settle", "0.02"},
      {"calibrate", "1"},
      {"refine_tol", "1e-9"}}},
    {Experiment::SolverCompare,
     {{"eta", "0.02"},
      {"omega", "1"},
      {"phi", "0.7"},
      {"tau_sw_mult", "10"},
      {"area_pi", "1"},
      {"samples", "24"},
      {"n_max", "4"}}},
    {Experiment::Reversal,
     {{"eta", "0.05"},
      {"omega", "1"},
      {"phi", "0.52359877559829882"},
      {"m_max", "20"}}},
    {Experiment::Teleport,
     {{"eta", "0.05"},
      {"omega", "1"},
      {"phi", "0.39269908169872414"},
      {"chi", "0"},
      {"pairs", "100000"},
      {"weak_g0", "0.04"},
      {"ramp_mult", "8"},
      {"extra_cycles", "1"},
      {"refine_tol", "1e-10"},
      {"latency", "0.25"},
      {"jitter", "0"},
      {"drop", "0"},
      {"operational", "0"},
      {"measure_all", "0"},
      {"transcript", "0"}}},
    {Experiment::PhaseRecover,
     {{"eta", "0.05"},
      {"omega", "1"},
      {"phi", "0.3"},
      {"chi", "0"},
      {"pairs", "1000000"},
      {"offset2", "1.5707963267948966"},
      {"weak_g0", "0.04"},
      {"ramp_mult", "8"},
      {"extra_cycles", "1"},
      {"refine_tol", "1e-10"},
      {"latency", "0.25"},
      {"jitter", "0"},
      {"drop", "0"},
      {"transcript", "0"}}},
    {Experiment::LockScan,
     {{"delta", "0.001"},
      {"omega", "1"},
      {"natoms", "8"},
      {"samples", "10000"},
      {"exact_born", "0"},
      {"stagger", "349"},
      {"scan_points", "16"},
      {"phi", "0"},
      {"chi", "0"}}},
    {Experiment::LockLoop,
     {{"delta0", "0.001"},
      {"omega", "1"},
      {"natoms", "8"},
      {"samples", "10000"},
      {"exact_born", "0"},
      {"stagger", "349"},
      {"scan_points", "16"},
      {"gain", "0.5"},
      {"iterations", "20"},
      {"max_step", "1"}}},
};

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

} // namespace

const char* experiment_name(Experiment e) {
    switch (e) {
        case Experiment::BsoScan: return "bso-scan";
        case Experiment::SolverCompare: return "solver-compare";
        case Experiment::Reversal: return "reversal";
        case Experiment::Teleport: return "teleport";
        case Experiment::PhaseRecover: return "phase-recover";
        case Experiment::LockScan: return "lock-scan";
        case Experiment::LockLoop: return "lock-loop";
    }
    throw Error("unknown experiment");
}

Experiment experiment_from_name(const std::string& name) {
    for (Experiment e : {Experiment::BsoScan, Experiment::SolverCompare,
                         Experiment::Reversal, Experiment::Teleport,
                         Experiment::PhaseRecover, Experiment::LockScan,
                         Experiment::LockLoop})
        if (name == experiment_name(e)) return e;
    throw ParseError("unknown experiment: " + name);
}

const std::map<std::string, std::string>& default_parameters(Experiment e) {
    return kDefaults.at(e);
}

double ExperimentConfig::get_double(const std::string& key) const {
    const std::string& s = get_string(key);
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
        throw ParseError("malformed number for key '" + key + "': " + s);
    return v;
}

long ExperimentConfig::get_long(const std::string& key) const {
    const double v = get_double(key);
    if (v != std::floor(v))
        throw ParseError("expected an integer for key '" + key + "'");
    return static_cast<long>(v);
}

bool ExperimentConfig::get_bool(const std::string& key) const {
    const std::string& s = get_string(key);
    if (s == "1" || s == "true" || s == "yes") return true;
    if (s == "0" || s == "false" || s == "no") return false;
    throw ParseError("malformed boolean for key '" + key + "': " + s);
}

const std::string& ExperimentConfig::get_string(const std::string& key) const {
    const auto it = parameters.find(key);
    if (it == parameters.end()) throw UnknownKey("unknown key: " + key);
    return it->second;
}

ExperimentConfig parse_config(Experiment experiment, const std::string& config_file,
                              const std::vector<std::string>& overrides,
                              std::uint64_t seed, const std::string& output_path) {
    ExperimentConfig cfg;
    cfg.experiment = experiment;
    cfg.parameters = default_parameters(experiment);
    cfg.seed = seed;
    cfg.output_path = output_path;

    auto set_kv = [&cfg](const std::string& key, const std::string& value,
                         const std::string& where) {
        if (cfg.parameters.find(key) == cfg.parameters.end())
            throw UnknownKey("unknown key '" + key + "' (" + where + ")");
        cfg.parameters[key] = value;
    };

    if (!config_file.empty()) {
        std::ifstream in(config_file);
        if (!in) throw ParseError("cannot read config file: " + config_file);
        std::stringstream buf;
        buf << in.rdbuf();
        const std::string text = buf.str();
        const std::string head = trim(text);
        if (!head.empty() && head[0] == '{') {
            ExperimentConfig from = config_from_manifest(text);
            if (from.experiment != experiment)
                throw ParseError("manifest is for experiment '" +
                                 std::string(experiment_name(from.experiment)) + "'");
            cfg = from;
            cfg.output_path = output_path;
        } else {
            std::istringstream lines(text);
            std::string line;
            int lineno = 0;
            while (std::getline(lines, line)) {
                ++lineno;
                const std::string t = trim(line);
                if (t.empty() || t[0] == '#') continue;
                const auto eq = t.find('=');
                if (eq == std::string::npos)
                    throw ParseError("line " + std::to_string(lineno) +
                                     ": expected key=value");
                set_kv(trim(t.substr(0, eq)), trim(t.substr(eq + 1)),
                       "line " + std::to_string(lineno));
            }
        }
    }

    for (const auto& ov : overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos)
            throw ParseError("--set expects key=value, got: " + ov);
        set_kv(trim(ov.substr(0, eq)), trim(ov.substr(eq + 1)), "--set flag");
    }
    return cfg;
}

std::string manifest_json(const ExperimentConfig& config) {
    json j;
    j["experiment"] = experiment_name(config.experiment);
    j["seed"] = config.seed;
    j["output"] = config.output_path;
    j["version"] = BSOSIM_VERSION;
    j["parameters"] = config.parameters;
    return j.dump(2) + "\n";
}

ExperimentConfig config_from_manifest(const std::string& manifest_text) {
    json j = json::parse(manifest_text);
    ExperimentConfig cfg;
    cfg.experiment = experiment_from_name(j.at("experiment").get<std::string>());
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.output_path = j.at("output").get<std::string>();
    cfg.parameters = default_parameters(cfg.experiment);
    for (const auto& [k, v] : j.at("parameters").items()) {
        if (cfg.parameters.find(k) == cfg.parameters.end())
            throw UnknownKey("unknown key in manifest: " + k);
        cfg.parameters[k] = v.get<std::string>();
    }
    return cfg;
}

namespace {

DriveField weak_field(double omega, double phase, double g0) {
    DriveField f;
    f.omega = omega;
    f.phi = phase;
    f.g0M = g0;
    f.envelope = Envelope::Step;
    f.rwa = true;
    return f;
}

ProtocolConfig protocol_config_from(const ExperimentConfig& c, double phi_override,
                                    long pairs) {
    const double omega = c.get_double("omega");
    ProtocolConfig pc;
    pc.alice_field = weak_field(omega, phi_override, c.get_double("weak_g0") * omega);
    pc.bob_field = weak_field(omega, c.get_double("chi"), c.get_double("weak_g0") * omega);
    pc.eta_measure = c.get_double("eta");
    pc.pairs = pairs;
    pc.seed = c.seed;
    pc.window.ramp_mult = c.get_double("ramp_mult");
    pc.window.extra_cycles = static_cast<int>(c.get_long("extra_cycles"));
    pc.window.refine_tol = c.get_double("refine_tol");
    pc.operational_alice = c.get_bool("operational");
    pc.measure_all = c.get_bool("measure_all");
    return pc;
}

Channel channel_from(const ExperimentConfig& c) {
    ChannelModel m;
    m.base_latency = c.get_double("latency");
    m.jitter = c.get_double("jitter");
    m.drop_probability = c.get_double("drop");
    m.seed = derive_seed(c.seed, "channel");
    return Channel(m);
}

void write_transcript(const Channel& channel, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open transcript file: " + path);
    for (const auto& r : channel.transcript()) {
        json j;
        j["sequence"] = r.sequence;
        j["sender"] = sender_name(r.sender);
        j["kind"] = kind_name(r.kind);
        if (const auto* v = std::get_if<std::vector<std::int64_t>>(&r.payload))
            j["payload"] = *v;
        else if (const auto* d = std::get_if<double>(&r.payload))
            j["payload"] = *d;
        else if (const auto* n = std::get_if<std::int64_t>(&r.payload))
            j["payload"] = *n;
        else
            j["payload"] = nullptr;
        j["send_time"] = r.send_time;
        j["delivery_time"] = r.delivery_time;
        j["dropped"] = r.dropped;
        out << j.dump() << "\n";
    }
}

int run_bso_scan(const ExperimentConfig& c, CsvWriter& csv) {
    const double eta = c.get_double("eta");
    const double omega = c.get_double("omega");
    DriveField tmpl;
    tmpl.g0M = 4.0 * eta * omega;
    tmpl.omega = omega;
    tmpl.envelope = Envelope::ExpSwitch;
    tmpl.tau_sw = c.get_double("tau_sw_mult") / tmpl.g0M;

    PulseSpec pulse = settled_pulse(tmpl, M_PI / 2.0, c.get_double("settle"));
    if (c.get_bool("calibrate"))
        pulse.duration = calibrate_half_population_duration(tmpl, pulse.duration);

    std::vector<double> phases;
    const long n = c.get_long("phases");
    for (long i = 0; i < n; ++i) phases.push_back(M_PI * i / n);

    const BsoScanResult res = bso_scan(tmpl, phases, pulse, c.get_double("refine_tol"));
    csv.comment("pulse_duration", format_real(pulse.duration));
    csv.comment("fit_phase", format_real(res.fit_phase));
    csv.header({"phi", "excited_population", "fit_amplitude", "fit_offset"});
    for (const auto& p : res.points)
        csv.row({format_real(p.phi), format_real(p.excited_population),
                 format_real(res.fit_amplitude), format_real(res.fit_offset)});
    return 0;
}

int run_solver_compare(const ExperimentConfig& c, CsvWriter& csv) {
    const double eta = c.get_double("eta");
    const double omega = c.get_double("omega");
    DriveField f;
    f.g0M = 4.0 * eta * omega;
    f.omega = omega;
    f.phi = c.get_double("phi");
    f.envelope = Envelope::ExpSwitch;
    f.tau_sw = c.get_double("tau_sw_mult") / f.g0M;

    const double T = duration_for_area(f, c.get_double("area_pi") * M_PI);
    const int n_max = static_cast<int>(c.get_long("n_max"));
    const long samples = c.get_long("samples");
    FloquetOptions fo;
    fo.n_samples = static_cast<int>(samples) + 1;
    const FloquetTrajectory traj = solve_floquet(f, 0.0, T, n_max, fo);

    csv.header({"t", "p0_exact", "p1_exact", "dev_floquet", "dev_closed",
                "dev_closed_mod"});
    const double dt = max_dt_for(f);
    for (std::size_t i = 1; i < traj.times.size(); ++i) {
        const double t = traj.times[i];
        const StateVector ex_rot =
            integrate_exact(StateVector::ground(Frame::Rotating), f, 0.0, t, dt);
        const StateVector ex_lab = to_lab(ex_rot, f);
        const StateVector fl = traj.state_at(i);
        const StateVector cf = closed_form_state(f, t);
        const double dev_fl = (ex_rot.amplitudes - fl.amplitudes).cwiseAbs().maxCoeff();
        const double dev_cf = (ex_lab.amplitudes - cf.amplitudes).cwiseAbs().maxCoeff();
        double dev_cf_mod = 0.0;
        for (int k = 0; k < 2; ++k)
            dev_cf_mod = std::max(dev_cf_mod,
                                  std::abs(std::abs(ex_lab.amplitudes[k]) -
                                           std::abs(cf.amplitudes[k])));
        csv.row({format_real(t), format_real(ex_lab.population(0)),
                 format_real(ex_lab.population(1)), format_real(dev_fl),
                 format_real(dev_cf), format_real(dev_cf_mod)});
    }
    return 0;
}

int run_reversal(const ExperimentConfig& c, CsvWriter& csv) {
    const double eta = c.get_double("eta");
    const double omega = c.get_double("omega");
    const double phi = c.get_double("phi");
    const long m_max = c.get_long("m_max");

    DriveField f;
    f.g0M = 4.0 * eta * omega;
    f.omega = omega;
    f.phi = phi;
    f.envelope = Envelope::Step;
    const double dt = max_dt_for(f);

    DriveField frwa = f;
    frwa.rwa = true;

    csv.header({"m", "T_on", "fidelity_on", "fidelity_off", "fidelity_rwa"});
    for (long m = 1; m <= m_max; ++m) {
        const double T_on = static_cast<double>(m) * M_PI / omega;
        const double T_off = (static_cast<double>(m) + 0.5) * M_PI / omega;
        const StateVector s0 = StateVector::ground(Frame::Lab);
        const StateVector fwd_on = integrate_exact(s0, f, 0.0, T_on, dt);
        const double fid_on = fidelity(s0, time_reverse(fwd_on, f, T_on, dt));
        const StateVector fwd_off = integrate_exact(s0, f, 0.0, T_off, dt);
        const double fid_off = fidelity(s0, time_reverse(fwd_off, f, T_off, dt));
        const StateVector r0 = StateVector::ground(Frame::Rotating);
        const StateVector fwd_rwa = integrate_exact(r0, frwa, 0.0, T_on, dt);
        const double fid_rwa = fidelity(r0, time_reverse(fwd_rwa, frwa, T_on, dt));
        csv.row({format_real(static_cast<double>(m)), format_real(T_on),
                 format_real(fid_on), format_real(fid_off), format_real(fid_rwa)});
    }
    return 0;
}

int run_teleport(const ExperimentConfig& c, CsvWriter& csv) {
    const long pairs = c.get_long("pairs");
    ProtocolConfig pc = protocol_config_from(c, c.get_double("phi"), pairs);
    Channel channel = channel_from(c);
    const MeasurementLedger ledger = run_protocol(pc, channel);

    const double omega = pc.alice_field.omega;
    const double t_alice = quadrature_time_at_or_after(0.0, omega);
    const auto probs = protocol_probabilities(pc, 0.0, 0.0, t_alice);

    csv.header({"phi", "chi", "pairs", "M", "L", "zeta_raw", "zeta_norm", "p_alice_born",
                "p_bob_born"});
    csv.row({format_real(c.get_double("phi")), format_real(c.get_double("chi")),
             std::to_string(pairs), std::to_string(ledger.M), std::to_string(ledger.L),
             format_real(ledger.zeta_raw),
             format_real(ledger.zeta_norm(pc.eta_measure)), format_real(probs.p_alice),
             format_real(probs.p_bob_given_plus)});
    if (c.get_bool("transcript"))
        write_transcript(channel, c.output_path + ".transcript.jsonl");
    return 0;
}

int run_phase_recover(const ExperimentConfig& c, CsvWriter& csv) {
    const long pairs = c.get_long("pairs");
    const double phi_true = c.get_double("phi");
    const double offset2 = c.get_double("offset2");

    Channel channel = channel_from(c);
    ProtocolConfig run1 = protocol_config_from(c, phi_true, pairs);
    run1.seed = derive_seed(c.seed, "run1");
    const MeasurementLedger led_sin = run_protocol(run1, channel);

    channel.send_reliable({MessageKind::PhaseShiftAnnounce, Sender::Alice, 0,
                           MessagePayload{offset2}});

    ProtocolConfig run2 = protocol_config_from(c, phi_true + offset2 / 2.0, pairs);
    run2.seed = derive_seed(c.seed, "run2");
    const MeasurementLedger led_cos = run_protocol(run2, channel);

    const PhaseEstimate est = estimate_phase(led_sin, led_cos, run1.eta_measure);
    double err = std::fmod(std::abs(est.phi_mod_pi - phi_true), M_PI);
    if (err > M_PI / 2.0) err = M_PI - err;

    csv.header({"phi_true", "sin2phi_hat", "cos2phi_hat", "phi_mod_pi", "stderr",
                "abs_err_mod_pi", "M_sin", "M_cos"});
    csv.row({format_real(phi_true), format_real(est.sin2phi_hat),
             format_real(est.cos2phi_hat), format_real(est.phi_mod_pi),
             format_real(est.stderr_phi), format_real(err), std::to_string(led_sin.M),
             std::to_string(led_cos.M)});
    if (c.get_bool("transcript"))
        write_transcript(channel, c.output_path + ".transcript.jsonl");
    return 0;
}

int run_lock_scan_exp(const ExperimentConfig& c, CsvWriter& csv) {
    const double omega = c.get_double("omega");
    const double delta = c.get_double("delta");
    auto [alice, bob] =
        build_arrays(static_cast<int>(c.get_long("natoms")), omega,
                     omega * (1.0 + delta), ArrayLayout::Uniform, {},
                     c.get_double("phi"), c.get_double("chi"));
    LockScanOptions opts;
    opts.exact_born = c.get_bool("exact_born");
    opts.seed = c.seed;
    opts.stagger_periods = static_cast<int>(c.get_long("stagger"));
    std::vector<double> times;
    const long pts = c.get_long("scan_points");
    for (long k = 0; k < pts; ++k)
        times.push_back(2.0 * M_PI * k / (pts * bob.omega));
    const LockProfile prof = run_lock_scan(alice, bob, c.get_long("samples"), times, opts);
    const DetuningEstimate est = detect_detuning(prof, alice, bob);

    csv.comment("peak_success", format_real(prof.peak_success));
    csv.comment("delta_true", format_real(delta));
    csv.header({"x", "success_probability", "sample_count", "delta_omega_hat",
                "stderr", "aliased"});
    for (const auto& st : prof.per_position)
        csv.row({format_real(st.x), format_real(st.success_probability),
                 std::to_string(st.sample_count), format_real(est.delta_omega_hat),
                 format_real(est.stderr_delta), est.aliased ? "1" : "0"});
    return 0;
}

int run_lock_loop_exp(const ExperimentConfig& c, CsvWriter& csv) {
    LockController ctrl;
    ctrl.gain = c.get_double("gain");
    ctrl.max_step = c.get_double("max_step");
    LockLoopConfig lc;
    lc.n_atoms = static_cast<int>(c.get_long("natoms"));
    lc.omega_a = c.get_double("omega");
    lc.samples_per_atom = c.get_long("samples");
    lc.scan.exact_born = c.get_bool("exact_born");
    lc.scan.seed = c.seed;
    lc.scan.stagger_periods = static_cast<int>(c.get_long("stagger"));
    lc.scan_points = static_cast<int>(c.get_long("scan_points"));

    const LockController out = lock_loop(ctrl, c.get_double("delta0"),
                                         static_cast<int>(c.get_long("iterations")), lc);
    csv.comment("non_convergence", out.non_convergence ? "1" : "0");
    csv.header({"iteration", "delta_omega_hat", "stderr", "omega_b", "delta_true",
                "aliased"});
    for (const auto& row : out.history)
        csv.row({std::to_string(row.iteration), format_real(row.delta_omega_hat),
                 format_real(row.stderr_delta), format_real(row.omega_b),
                 format_real(row.delta_true), row.aliased ? "1" : "0"});
    return 0;
}

} // namespace

int run_experiment(const ExperimentConfig& config) {
    try {
        CsvWriter csv;
        csv.comment("experiment", experiment_name(config.experiment));
        csv.comment("seed", std::to_string(config.seed));
        csv.comment("version", BSOSIM_VERSION);
        for (const auto& [k, v] : config.parameters) csv.comment(k, v);

        int rc = 1;
        switch (config.experiment) {
            case Experiment::BsoScan: rc = run_bso_scan(config, csv); break;
            case Experiment::SolverCompare: rc = run_solver_compare(config, csv); break;
            case Experiment::Reversal: rc = run_reversal(config, csv); break;
            case Experiment::Teleport: rc = run_teleport(config, csv); break;
            case Experiment::PhaseRecover: rc = run_phase_recover(config, csv); break;
            case Experiment::LockScan: rc = run_lock_scan_exp(config, csv); break;
            case Experiment::LockLoop: rc = run_lock_loop_exp(config, csv); break;
        }
        if (rc == 0) {
            csv.write(config.output_path);
            std::ofstream mf(config.output_path + ".manifest.json", std::ios::binary);
            if (!mf) throw Error("cannot write manifest");
            mf << manifest_json(config);
        }
        return rc;
    } catch (const std::exception& e) {
        std::cerr << "error (" << experiment_name(config.experiment) << "): " << e.what()
                  << "\n";
        return 1;
    }
}

} // namespace bsosim
