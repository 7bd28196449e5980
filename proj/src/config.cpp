#include "grl/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace grl {

namespace {

long parse_long(const std::string& key, const std::string& value) {
    long out{};
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size())
        throw std::invalid_argument("config: " + key + ": not an integer: '" + value + "'");
    return out;
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        double out = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("");
        return out;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: " + key + ": not a number: '" + value + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw std::invalid_argument("config: " + key + ": not a boolean: '" + value + "'");
}

std::vector<std::uint64_t> parse_seeds(const std::string& key, const std::string& value) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ','))
        seeds.push_back(static_cast<std::uint64_t>(parse_long(key, item)));
    if (seeds.empty()) throw std::invalid_argument("config: " + key + ": empty seed list");
    return seeds;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct Field {
    const char* key;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

#define INT_FIELD(key, ref)                                                               \
    Field{key, [](RunConfig& c, const std::string& v) { c.ref = static_cast<int>(parse_long(key, v)); }, \
          [](const RunConfig& c) { return std::to_string(c.ref); }}
#define LONG_FIELD(key, ref)                                                        \
    Field{key, [](RunConfig& c, const std::string& v) { c.ref = parse_long(key, v); }, \
          [](const RunConfig& c) { return std::to_string(c.ref); }}
#define SIZE_FIELD(key, ref)                                                                          \
    Field{key,                                                                                        \
          [](RunConfig& c, const std::string& v) { c.ref = static_cast<std::size_t>(parse_long(key, v)); }, \
          [](const RunConfig& c) { return std::to_string(c.ref); }}
#define DBL_FIELD(key, ref)                                                           \
    Field{key, [](RunConfig& c, const std::string& v) { c.ref = parse_double(key, v); }, \
          [](const RunConfig& c) { return fmt(c.ref); }}
#define BOOL_FIELD(key, ref)                                                        \
    Field{key, [](RunConfig& c, const std::string& v) { c.ref = parse_bool(key, v); }, \
          [](const RunConfig& c) { return c.ref ? std::string("true") : std::string("false"); }}
#define STR_FIELD(key, ref)                                             \
    Field{key, [](RunConfig& c, const std::string& v) { c.ref = v; }, \
          [](const RunConfig& c) { return c.ref; }}

const std::vector<Field>& fields() {
    // speed limits are configured in km/h to mirror the usual scenario tables
    static const std::vector<Field> table = {
        INT_FIELD("scenario.n_hvs", scenario.n_hvs),
        INT_FIELD("scenario.n_avs", scenario.n_avs),
        INT_FIELD("scenario.n_ramp1", scenario.n_ramp1),
        INT_FIELD("scenario.n_ramp2", scenario.n_ramp2),
        DBL_FIELD("scenario.highway_length", scenario.highway_length),
        DBL_FIELD("scenario.x_ramp1", scenario.x_ramp1),
        DBL_FIELD("scenario.x_ramp2", scenario.x_ramp2),
        Field{"scenario.v_max_hv_kmh",
              [](RunConfig& c, const std::string& v) {
                  c.scenario.v_max_hv = parse_double("scenario.v_max_hv_kmh", v) / 3.6;
              },
              [](const RunConfig& c) { return fmt(c.scenario.v_max_hv * 3.6); }},
        Field{"scenario.v_max_av_kmh",
              [](RunConfig& c, const std::string& v) {
                  c.scenario.v_max_av = parse_double("scenario.v_max_av_kmh", v) / 3.6;
              },
              [](const RunConfig& c) { return fmt(c.scenario.v_max_av * 3.6); }},
        DBL_FIELD("scenario.inflow_hv", scenario.inflow_hv),
        DBL_FIELD("scenario.inflow_av", scenario.inflow_av),
        DBL_FIELD("scenario.dt", scenario.dt),
        INT_FIELD("scenario.max_steps", scenario.max_steps),
        DBL_FIELD("scenario.vehicle_length", scenario.vehicle_length),
        DBL_FIELD("scenario.sensing_range", scenario.sensing_range),
        DBL_FIELD("scenario.ramp_window", scenario.ramp_window),
        DBL_FIELD("scenario.idm.a_max", scenario.idm.a_max),
        DBL_FIELD("scenario.idm.b_comf", scenario.idm.b_comf),
        DBL_FIELD("scenario.idm.delta", scenario.idm.delta),
        DBL_FIELD("scenario.idm.s0", scenario.idm.s0),
        DBL_FIELD("scenario.idm.t_headway", scenario.idm.t_headway),
        DBL_FIELD("scenario.idm.b_emergency", scenario.idm.b_emergency),
        DBL_FIELD("scenario.reward.w1", scenario.reward.w1),
        DBL_FIELD("scenario.reward.w2", scenario.reward.w2),
        DBL_FIELD("scenario.reward.w3", scenario.reward.w3),
        DBL_FIELD("scenario.reward.w4", scenario.reward.w4),
        DBL_FIELD("scenario.reward.exit_bonus", scenario.reward.exit_bonus),
        DBL_FIELD("scenario.reward.approach_bonus", scenario.reward.approach_bonus),
        DBL_FIELD("scenario.reward.miss_penalty", scenario.reward.miss_penalty),
        DBL_FIELD("scenario.reward.lc_magnitude", scenario.reward.lc_magnitude),
        DBL_FIELD("scenario.reward.collision_magnitude", scenario.reward.collision_magnitude),
        INT_FIELD("training.episodes", training.episodes),
        LONG_FIELD("training.random_phase_steps", training.random_phase_steps),
        INT_FIELD("training.batch_size", training.batch_size),
        SIZE_FIELD("training.replay_capacity", training.replay_capacity),
        DBL_FIELD("training.gamma", training.gamma),
        DBL_FIELD("training.lr", training.lr),
        INT_FIELD("training.online_update_every", training.online_update_every),
        INT_FIELD("training.target_update_every", training.target_update_every),
        DBL_FIELD("training.soft_tau", training.soft_tau),
        DBL_FIELD("training.epsilon", training.epsilon),
        BOOL_FIELD("training.epsilon_linear_decay", training.epsilon_linear_decay),
        DBL_FIELD("training.epsilon_start", training.epsilon_start),
        LONG_FIELD("training.epsilon_decay_steps", training.epsilon_decay_steps),
        Field{"training.seeds",
              [](RunConfig& c, const std::string& v) {
                  c.training.seeds = parse_seeds("training.seeds", v);
              },
              [](const RunConfig& c) {
                  std::string out;
                  for (std::size_t i = 0; i < c.training.seeds.size(); ++i) {
                      if (i) out += ',';
                      out += std::to_string(c.training.seeds[i]);
                  }
                  return out;
              }},
        Field{"training.variant",
              [](RunConfig& c, const std::string& v) { c.training.variant = variant_from_name(v); },
              [](const RunConfig& c) { return variant_name(c.training.variant); }},
        INT_FIELD("training.best_eval_every", training.best_eval_every),
        INT_FIELD("training.best_eval_episodes", training.best_eval_episodes),
        SIZE_FIELD("training.h1", training.widths.h1),
        SIZE_FIELD("training.h2", training.widths.h2),
        SIZE_FIELD("training.h3", training.widths.h3),
        BOOL_FIELD("training.literal_adjacency_norm", training.literal_adjacency_norm),
        SIZE_FIELD("encoder.slots", encoder_slots),
        STR_FIELD("output_dir", output_dir),
        STR_FIELD("run_label", run_label),
    };
    return table;
}

#undef INT_FIELD
#undef LONG_FIELD
#undef SIZE_FIELD
#undef DBL_FIELD
#undef BOOL_FIELD
#undef STR_FIELD

std::string trim(const std::string& s) {
    std::size_t begin = s.find_first_not_of(" \t\r");
    if (begin == std::string::npos) return "";
    std::size_t end = s.find_last_not_of(" \t\r");
    return s.substr(begin, end - begin + 1);
}

void set_key(RunConfig& cfg, const std::string& key, const std::string& value) {
    for (const Field& f : fields()) {
        if (key == f.key) {
            f.set(cfg, value);
            return;
        }
    }
    throw std::invalid_argument("config: unknown key '" + key + "'");
}

}  // namespace

EncoderConfig RunConfig::encoder() const {
    return EncoderConfig::from_scenario(scenario, encoder_slots);
}

void RunConfig::validate() const {
    scenario.validate();
    training.validate();
    encoder().validate();
    if (encoder_slots != 0 && encoder_slots < static_cast<std::size_t>(scenario.total_vehicles()))
        throw std::invalid_argument("config: encoder.slots smaller than configured vehicle count");
    if (output_dir.empty()) throw std::invalid_argument("config: output_dir must not be empty");
}

RunConfig parse_run_config_text(const std::string& text) {
    RunConfig cfg;
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
        ++lineno;
        std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        std::size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                        ": expected 'key = value'");
        set_key(cfg, trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
    }
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("config not found: " + path);
    std::stringstream buf;
    buf << is.rdbuf();
    return parse_run_config_text(buf.str());
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
    std::size_t eq = assignment.find('=');
    if (eq == std::string::npos)
        throw std::invalid_argument("--set expects dotted.key=value, got '" + assignment + "'");
    set_key(cfg, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

std::string resolved_config_text(const RunConfig& cfg) {
    std::ostringstream os;
    for (const Field& f : fields()) os << f.key << " = " << f.get(cfg) << '\n';
    return os.str();
}

}  // namespace grl
