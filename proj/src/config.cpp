#include "ftraj/config.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <set>
#include <string>

#include "ftraj/errors.hpp"

namespace ftraj {

namespace {

using nlohmann::json;

// Wraps one JSON object for strict reading: every key must be consumed,
// so typos and stale keys fail loudly instead of being ignored.
class Block {
  public:
    Block(const json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j_.is_object())
            throw ConfigError(where_ + ": expected an object");
    }

    bool has(const std::string& k) const { return j_.contains(k); }

    const json& raw(const std::string& k) {
        seen_.insert(k);
        return j_.at(k);
    }

    double number(const std::string& k, double fallback) {
        if (!has(k)) return fallback;
        return read_number(k);
    }
    double require_number(const std::string& k) {
        if (!has(k)) missing(k);
        return read_number(k);
    }
    int integer(const std::string& k, int fallback) {
        if (!has(k)) return fallback;
        return read_integer(k);
    }
    int require_integer(const std::string& k) {
        if (!has(k)) missing(k);
        return read_integer(k);
    }
    std::uint64_t unsigned_integer(const std::string& k,
                                   std::uint64_t fallback) {
        if (!has(k)) return fallback;
        seen_.insert(k);
        const json& v = j_.at(k);
        if (!v.is_number_integer() || (v.is_number_integer() &&
                                       !v.is_number_unsigned() &&
                                       v.get<long long>() < 0))
            throw ConfigError(where_ + ": '" + k +
                              "' must be a non-negative integer");
        return v.get<std::uint64_t>();
    }
    std::string require_string(const std::string& k) {
        if (!has(k)) missing(k);
        seen_.insert(k);
        const json& v = j_.at(k);
        if (!v.is_string())
            throw ConfigError(where_ + ": '" + k + "' must be a string");
        return v.get<std::string>();
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key()))
                throw ConfigError(where_ + ": unknown key '" + it.key() +
                                  "'");
    }

  private:
    [[noreturn]] void missing(const std::string& k) const {
        throw ConfigError(where_ + ": missing required key '" + k + "'");
    }
    double read_number(const std::string& k) {
        seen_.insert(k);
        const json& v = j_.at(k);
        if (!v.is_number())
            throw ConfigError(where_ + ": '" + k + "' must be a number");
        return v.get<double>();
    }
    int read_integer(const std::string& k) {
        seen_.insert(k);
        const json& v = j_.at(k);
        if (!v.is_number_integer())
            throw ConfigError(where_ + ": '" + k + "' must be an integer");
        return v.get<int>();
    }

    const json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

void check_size(int L, const std::string& where) {
    if (L < 2 || L % 2 != 0)
        throw ConfigError(where + ": L must be an even integer >= 2, got " +
                          std::to_string(L));
}

void check_gamma(double g, const std::string& where) {
    if (!(g >= 0.0))
        throw ConfigError(where + ": gamma must be >= 0");
}

void check_probability(double p, const std::string& key,
                       const std::string& where) {
    if (!(p >= 0.0 && p <= 1.0))
        throw ConfigError(where + ": " + key + " must lie in [0, 1]");
}

std::vector<double> number_list(Block& block, const std::string& key,
                                const std::string& where) {
    const json& v = block.raw(key);
    if (!v.is_array())
        throw ConfigError(where + ": '" + key + "' must be an array");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number())
            throw ConfigError(where + ": '" + key +
                              "' entries must be numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

std::vector<int> integer_list(Block& block, const std::string& key,
                              const std::string& where) {
    const json& v = block.raw(key);
    if (!v.is_array())
        throw ConfigError(where + ": '" + key + "' must be an array");
    std::vector<int> out;
    for (const auto& e : v) {
        if (!e.is_number_integer())
            throw ConfigError(where + ": '" + key +
                              "' entries must be integers");
        out.push_back(e.get<int>());
    }
    return out;
}

ModelConfig parse_model(const json& j, const SweepConfig& sweep) {
    Block block(j, "model");
    ModelConfig m;
    m.name = block.require_string("model");
    const std::string where = "model (" + m.name + ")";
    const bool gamma_swept = sweep.gamma.has_value();

    auto require_gamma = [&]() {
        if (block.has("gamma")) {
            m.gamma = block.require_number("gamma");
            check_gamma(m.gamma, where);
        } else if (!gamma_swept) {
            throw ConfigError(where +
                              ": gamma is required (or must be swept)");
        }
    };

    if (m.name == "tight-binding") {
        m.L = block.require_integer("L");
        m.J = block.number("J", 1.0);
        require_gamma();
    } else if (m.name == "kitaev") {
        m.L = block.require_integer("L");
        m.J = block.number("J", 1.0);
        m.h = block.number("h", 0.0);
        if (block.has("alpha")) {
            m.alpha = block.require_number("alpha");
            if (!(*m.alpha > 0.0))
                throw ConfigError(where + ": alpha must be > 0");
        }
        require_gamma();
    } else if (m.name == "tv-chain") {
        m.L = block.require_integer("L");
        m.t = block.number("t", 1.0);
        m.W = block.number("W", 1.0);
        m.V = block.number("V", 1.0);
        require_gamma();
    } else if (m.name == "syk") {
        m.L = block.require_integer("L");
        m.J = block.number("J", 1.0);
        m.coupling_seed = block.unsigned_integer("coupling_seed", 1);
        require_gamma();
    } else if (m.name == "ladder") {
        m.L = block.require_integer("L");
        m.ladder.t1 = block.number("t1", m.ladder.t1);
        m.ladder.t2 = block.number("t2", m.ladder.t2);
        m.ladder.t12 = block.number("t12", m.ladder.t12);
        m.ladder.tau_u = block.number("tau_u", m.ladder.tau_u);
        if (!(m.ladder.tau_u > 0.0))
            throw ConfigError(where + ": tau_u must be > 0");
        m.ladder.n_steady = block.integer("n_steady", m.ladder.n_steady);
        if (m.ladder.n_steady < 0)
            throw ConfigError(where + ": n_steady must be >= 0");
        m.ladder.tail = block.integer("tail", m.ladder.tail);
        if (m.ladder.tail < 1)
            throw ConfigError(where + ": tail must be >= 1");
        for (const char* key : {"p1", "p2"}) {
            bool swept = (key[1] == '1') ? sweep.p1.has_value()
                                         : sweep.p2.has_value();
            double& slot = (key[1] == '1') ? m.ladder.p1 : m.ladder.p2;
            if (block.has(key)) {
                slot = block.require_number(key);
                check_probability(slot, key, where);
            } else if (!swept) {
                throw ConfigError(where + ": " + key +
                                  " is required (or must be swept)");
            }
        }
    } else {
        throw ConfigError("model: unknown model '" + m.name + "'");
    }
    check_size(m.L, where);
    block.finish();
    return m;
}

SweepConfig parse_sweep(const json& j, const std::string& model_name) {
    Block block(j, "sweep");
    SweepConfig s;
    const bool is_ladder = model_name == "ladder";
    const bool is_kitaev = model_name == "kitaev";
    if (block.has("L")) {
        s.L = integer_list(block, "L", "sweep");
        for (int L : *s.L) check_size(L, "sweep");
    }
    if (block.has("gamma")) {
        if (is_ladder)
            throw ConfigError("sweep: gamma does not apply to the ladder");
        s.gamma = number_list(block, "gamma", "sweep");
        for (double g : *s.gamma) check_gamma(g, "sweep");
    }
    if (block.has("alpha")) {
        if (!is_kitaev)
            throw ConfigError("sweep: alpha applies only to the kitaev model");
        s.alpha = number_list(block, "alpha", "sweep");
        for (double a : *s.alpha)
            if (!(a > 0.0)) throw ConfigError("sweep: alpha must be > 0");
    }
    if (block.has("h")) {
        if (!is_kitaev)
            throw ConfigError("sweep: h applies only to the kitaev model");
        s.h = number_list(block, "h", "sweep");
    }
    for (const char* key : {"p1", "p2"}) {
        if (!block.has(key)) continue;
        if (!is_ladder)
            throw ConfigError(std::string("sweep: ") + key +
                              " applies only to the ladder");
        auto vals = number_list(block, key, "sweep");
        for (double p : vals) check_probability(p, key, "sweep");
        if (key[1] == '1')
            s.p1 = std::move(vals);
        else
            s.p2 = std::move(vals);
    }
    block.finish();
    return s;
}

json model_canonical(const ModelConfig& m) {
    json out;
    out["model"] = m.name;
    out["L"] = m.L;
    if (m.name == "tight-binding") {
        out["J"] = m.J;
        out["gamma"] = m.gamma;
    } else if (m.name == "kitaev") {
        out["J"] = m.J;
        out["h"] = m.h;
        if (m.alpha) out["alpha"] = *m.alpha;
        out["gamma"] = m.gamma;
    } else if (m.name == "tv-chain") {
        out["t"] = m.t;
        out["W"] = m.W;
        out["V"] = m.V;
        out["gamma"] = m.gamma;
    } else if (m.name == "syk") {
        out["J"] = m.J;
        out["coupling_seed"] = m.coupling_seed;
        out["gamma"] = m.gamma;
    } else {  // ladder
        out["t1"] = m.ladder.t1;
        out["t2"] = m.ladder.t2;
        out["t12"] = m.ladder.t12;
        out["p1"] = m.ladder.p1;
        out["p2"] = m.ladder.p2;
        out["tau_u"] = m.ladder.tau_u;
        out["n_steady"] = m.ladder.n_steady;
        out["tail"] = m.ladder.tail;
    }
    return out;
}

json sweep_canonical(const SweepConfig& s) {
    json out = json::object();
    if (s.L) out["L"] = *s.L;
    if (s.gamma) out["gamma"] = *s.gamma;
    if (s.alpha) out["alpha"] = *s.alpha;
    if (s.h) out["h"] = *s.h;
    if (s.p1) out["p1"] = *s.p1;
    if (s.p2) out["p2"] = *s.p2;
    return out;
}

}  // namespace

RunConfig parse_config(const json& j) {
    Block top(j, "config");
    RunConfig cfg;

    if (!top.has("model"))
        throw ConfigError("config: missing required block 'model'");

    // Sweep first: whether a dimension is swept decides which model-block
    // scalars are mandatory.
    SweepConfig sweep_block;
    std::string model_name;
    {
        const json& mj = top.raw("model");
        if (!mj.is_object() || !mj.contains("model") ||
            !mj.at("model").is_string())
            throw ConfigError("model: missing required key 'model'");
        model_name = mj.at("model").get<std::string>();
    }
    if (top.has("sweep"))
        sweep_block = parse_sweep(top.raw("sweep"), model_name);
    cfg.sweep = sweep_block;
    cfg.model = parse_model(j.at("model"), sweep_block);

    const bool is_ladder = cfg.model.name == "ladder";
    if (top.has("schedule")) {
        if (is_ladder)
            throw ConfigError(
                "schedule: the ladder protocol is cycle-driven; use "
                "n_steady/tail in the model block");
        Block sched(top.raw("schedule"), "schedule");
        cfg.schedule.dt = sched.number("dt", 0.01);
        double tf_default = -1.0;
        if (cfg.model.name == "tv-chain") tf_default = 2e3;
        if (cfg.model.name == "syk") tf_default = 3.4e2;
        if (sched.has("t_f"))
            cfg.schedule.t_f = sched.require_number("t_f");
        else if (tf_default > 0.0)
            cfg.schedule.t_f = tf_default;
        else
            throw ConfigError("schedule: missing required key 't_f'");
        cfg.schedule.t0 = sched.number("t0", -1.0);
        cfg.schedule.sample_stride = sched.integer("stride", 1);
        sched.finish();
        cfg.schedule.validate();
    } else if (!is_ladder) {
        cfg.schedule.dt = 0.01;
        if (cfg.model.name == "tv-chain")
            cfg.schedule.t_f = 2e3;
        else if (cfg.model.name == "syk")
            cfg.schedule.t_f = 3.4e2;
        else
            throw ConfigError(
                "schedule: required for this model (no default t_f)");
        cfg.schedule.t0 = -1.0;
        cfg.schedule.sample_stride = 1;
        cfg.schedule.validate();
    }

    if (top.has("ensemble")) {
        Block ens(top.raw("ensemble"), "ensemble");
        cfg.n_traj = ens.integer("n_traj", 48);
        if (cfg.n_traj < 1)
            throw ConfigError("ensemble: n_traj must be >= 1");
        cfg.master_seed = ens.unsigned_integer("master_seed", 0);
        cfg.workers = ens.integer("workers", 1);
        if (cfg.workers < 1)
            throw ConfigError("ensemble: workers must be >= 1");
        ens.finish();
    }

    if (top.has("observables")) {
        const json& obs = top.raw("observables");
        if (!obs.is_array() || obs.empty())
            throw ConfigError("observables: must be a non-empty array");
        for (const auto& e : obs) {
            if (!e.is_string() || e.get<std::string>().empty())
                throw ConfigError(
                    "observables: entries must be non-empty strings");
            cfg.observables.push_back(e.get<std::string>());
        }
    } else {
        cfg.observables = {is_ladder ? std::string("negativity")
                                     : std::string("entropy:half")};
    }

    if (top.has("output")) {
        Block out(top.raw("output"), "output");
        if (out.has("directory"))
            cfg.output.directory = out.require_string("directory");
        if (out.has("formats")) {
            const json& f = out.raw("formats");
            if (!f.is_array())
                throw ConfigError("output: 'formats' must be an array");
            cfg.output.formats.clear();
            for (const auto& e : f) {
                std::string s =
                    e.is_string() ? e.get<std::string>() : std::string();
                if (s != "csv" && s != "json")
                    throw ConfigError(
                        "output: formats must be 'csv' or 'json'");
                cfg.output.formats.push_back(s);
            }
        }
        out.finish();
    }
    top.finish();

    // Normalized record: defaults are filled in, so a config that spells a
    // default out hashes identically to one that omits it.
    cfg.canonical = json::object();
    cfg.canonical["model"] = model_canonical(cfg.model);
    if (!is_ladder) {
        json sched;
        sched["dt"] = cfg.schedule.dt;
        sched["t_f"] = cfg.schedule.t_f;
        sched["t0"] = cfg.schedule.window_start();
        sched["stride"] = cfg.schedule.sample_stride;
        cfg.canonical["schedule"] = sched;
    }
    json ens;
    ens["n_traj"] = cfg.n_traj;
    ens["master_seed"] = cfg.master_seed;
    cfg.canonical["ensemble"] = ens;
    cfg.canonical["observables"] = cfg.observables;
    cfg.canonical["sweep"] = sweep_canonical(cfg.sweep);
    json out;
    out["directory"] = cfg.output.directory;
    out["formats"] = cfg.output.formats;
    cfg.canonical["output"] = out;

    json payload = cfg.canonical;
    payload.erase("output");
    cfg.hash = config_hash(payload);
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config: invalid JSON in " + path + ": " +
                          e.what());
    }
    return parse_config(j);
}

std::string config_hash(const nlohmann::json& hash_payload) {
    const std::string data = hash_payload.dump();
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!EVP_Digest(data.data(), data.size(), md, &len, EVP_sha1(), nullptr))
        throw Error("config hash: digest failure");
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned i = 0; i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0x0F]);
    }
    return out;
}

std::vector<SweepPoint> expand_sweep(const RunConfig& config) {
    const auto& sw = config.sweep;
    const ModelConfig& m = config.model;
    std::vector<int> lv = sw.L ? *sw.L : std::vector<int>{m.L};
    std::vector<double> gv =
        sw.gamma ? *sw.gamma : std::vector<double>{m.gamma};
    std::vector<double> av =
        sw.alpha ? *sw.alpha
                 : std::vector<double>{m.alpha ? *m.alpha : 0.0};
    std::vector<double> hv = sw.h ? *sw.h : std::vector<double>{m.h};
    std::vector<double> p1v =
        sw.p1 ? *sw.p1 : std::vector<double>{m.ladder.p1};
    std::vector<double> p2v =
        sw.p2 ? *sw.p2 : std::vector<double>{m.ladder.p2};

    std::vector<SweepPoint> points;
    int index = 0;
    for (int L : lv)
        for (double g : gv)
            for (double a : av)
                for (double hh : hv)
                    for (double q1 : p1v)
                        for (double q2 : p2v) {
                            SweepPoint p;
                            p.index = index++;
                            p.model = m;
                            p.overrides = nlohmann::json::object();
                            p.model.L = L;
                            if (sw.L) p.overrides["L"] = L;
                            if (sw.gamma) {
                                p.model.gamma = g;
                                p.overrides["gamma"] = g;
                            }
                            if (sw.alpha) {
                                p.model.alpha = a;
                                p.overrides["alpha"] = a;
                            }
                            if (sw.h) {
                                p.model.h = hh;
                                p.overrides["h"] = hh;
                            }
                            if (sw.p1) {
                                p.model.ladder.p1 = q1;
                                p.overrides["p1"] = q1;
                            }
                            if (sw.p2) {
                                p.model.ladder.p2 = q2;
                                p.overrides["p2"] = q2;
                            }
                            points.push_back(std::move(p));
                        }
    return points;
}

std::uint64_t point_seed(std::uint64_t master_seed, int point_index) {
    // splitmix64 of (seed advanced by the point index): decorrelates the
    // per-point ensembles while staying a pure function of both inputs.
    std::uint64_t z = master_seed +
                      0x9E3779B97F4A7C15ull *
                          (static_cast<std::uint64_t>(point_index) + 1ull);
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
}

}  // namespace ftraj
