#include "atmg/game_io.hpp"

#include <cstdio>
#include <fstream>
#include <memory>

#include <json.hpp>

namespace atmg {

namespace {

using nlohmann::json;

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path + ": " + e.what());
  }
}

const json& field(const json& doc, const char* name) {
  auto it = doc.find(name);
  if (it == doc.end()) throw FormatError(std::string("missing field '") + name + "'");
  return *it;
}

std::size_t positive_count(const json& value, const char* name) {
  if (!value.is_number_integer() || value.get<long long>() <= 0) {
    throw FormatError(std::string("'") + name + "' must be a positive integer");
  }
  return value.get<std::size_t>();
}

double number(const json& value, const char* what) {
  if (!value.is_number()) throw FormatError(std::string(what) + " must be numeric");
  return value.get<double>();
}

// Flattens a nested array of the given shape in row-major order.
void flatten(const json& value, std::span<const std::size_t> shape, const char* what,
             std::vector<double>& out) {
  if (shape.empty()) {
    out.push_back(number(value, what));
    return;
  }
  if (!value.is_array() || value.size() != shape[0]) {
    throw FormatError(std::string("'") + what + "' has the wrong shape");
  }
  for (const auto& item : value) flatten(item, shape.subspan(1), what, out);
}

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};

void write_number(std::FILE* f, double v) { std::fprintf(f, "%.17g", v); }

}  // namespace

GameSpec read_game(const std::string& path) {
  const json doc = load_json(path);
  try {
    if (!doc.is_object()) throw FormatError("game file must hold a JSON object");
    const json& schema = field(doc, "schema");
    if (!schema.is_string() || schema.get<std::string>() != kGameSchema) {
      throw FormatError(std::string("schema must be \"") + kGameSchema + "\"");
    }
    GameSpec spec;
    spec.state_count = positive_count(field(doc, "states"), "states");
    const json& sizes = field(doc, "team_sizes");
    if (!sizes.is_array() || sizes.empty()) throw FormatError("'team_sizes' must be a nonempty array");
    for (const auto& a : sizes) spec.team_sizes.push_back(positive_count(a, "team_sizes entry"));
    spec.adversary_actions = positive_count(field(doc, "adversary_actions"), "adversary_actions");
    spec.discount = number(field(doc, "gamma"), "gamma");

    const std::size_t S = spec.state_count;
    const std::size_t J = spec.joint_action_count();
    const std::size_t B = spec.adversary_actions;
    const std::size_t rho_shape[] = {S};
    flatten(field(doc, "rho"), rho_shape, "rho", spec.initial_dist);
    const std::size_t reward_shape[] = {S, J, B};
    spec.reward.reserve(S * J * B);
    flatten(field(doc, "reward"), reward_shape, "reward", spec.reward);

    if (doc.contains("transition")) {
      const std::size_t shape[] = {S, J, B, S};
      spec.transition.reserve(S * J * B * S);
      flatten(doc["transition"], shape, "transition", spec.transition);
    } else {
      const json& entries = field(doc, "transition_sparse");
      if (!entries.is_array()) throw FormatError("'transition_sparse' must be an array");
      spec.transition.assign(S * J * B * S, 0.0);
      for (const auto& e : entries) {
        if (!e.is_array() || e.size() != 5) {
          throw FormatError("'transition_sparse' entries must be [s, a_joint, b, s', p]");
        }
        std::size_t idx[4];
        const std::size_t bound[4] = {S, J, B, S};
        for (int i = 0; i < 4; ++i) {
          if (!e[i].is_number_integer() || e[i].get<long long>() < 0 ||
              e[i].get<std::size_t>() >= bound[i]) {
            throw FormatError("'transition_sparse' index out of range");
          }
          idx[i] = e[i].get<std::size_t>();
        }
        spec.transition[spec.reward_index(idx[0], idx[1], idx[2]) * S + idx[3]] =
            number(e[4], "transition probability");
      }
    }
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": " + e.what());
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

void write_game(const GameSpec& spec, const std::string& path) {
  spec.check_shapes();
  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.c_str(), "w"));
  if (!file) throw FormatError("cannot write " + path);
  std::FILE* f = file.get();
  const std::size_t S = spec.state_count;
  const std::size_t J = spec.joint_action_count();
  const std::size_t B = spec.adversary_actions;

  std::fprintf(f, "{\n  \"schema\": \"%s\",\n  \"states\": %zu,\n  \"team_sizes\": [", kGameSchema, S);
  for (std::size_t k = 0; k < spec.team_count(); ++k) {
    std::fprintf(f, "%s%zu", k ? ", " : "", spec.team_sizes[k]);
  }
  std::fprintf(f, "],\n  \"adversary_actions\": %zu,\n  \"gamma\": ", B);
  write_number(f, spec.discount);
  std::fprintf(f, ",\n  \"rho\": [");
  for (std::size_t s = 0; s < S; ++s) {
    if (s) std::fputs(", ", f);
    write_number(f, spec.initial_dist[s]);
  }
  std::fprintf(f, "],\n  \"reward\": [");
  for (std::size_t s = 0; s < S; ++s) {
    std::fputs(s ? ",\n    [" : "\n    [", f);
    for (std::size_t aj = 0; aj < J; ++aj) {
      std::fputs(aj ? ", [" : "[", f);
      for (std::size_t b = 0; b < B; ++b) {
        if (b) std::fputs(", ", f);
        write_number(f, spec.reward_at(s, aj, b));
      }
      std::fputc(']', f);
    }
    std::fputc(']', f);
  }
  std::fputs("\n  ],\n", f);

  std::size_t nonzero = 0;
  for (double p : spec.transition) nonzero += p != 0.0;
  if (nonzero * 10 < spec.transition.size()) {
    std::fputs("  \"transition_sparse\": [", f);
    bool first = true;
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t aj = 0; aj < J; ++aj) {
        for (std::size_t b = 0; b < B; ++b) {
          auto row = spec.transition_row(s, aj, b);
          for (std::size_t t = 0; t < S; ++t) {
            if (row[t] == 0.0) continue;
            std::fprintf(f, "%s[%zu, %zu, %zu, %zu, ", first ? "\n    " : ",\n    ", s, aj, b, t);
            write_number(f, row[t]);
            std::fputc(']', f);
            first = false;
          }
        }
      }
    }
    std::fputs("\n  ]\n}\n", f);
  } else {
    std::fputs("  \"transition\": [", f);
    for (std::size_t s = 0; s < S; ++s) {
      std::fputs(s ? ",\n    [" : "\n    [", f);
      for (std::size_t aj = 0; aj < J; ++aj) {
        std::fputs(aj ? ", [" : "[", f);
        for (std::size_t b = 0; b < B; ++b) {
          std::fputs(b ? ", [" : "[", f);
          auto row = spec.transition_row(s, aj, b);
          for (std::size_t t = 0; t < S; ++t) {
            if (t) std::fputs(", ", f);
            write_number(f, row[t]);
          }
          std::fputc(']', f);
        }
        std::fputc(']', f);
      }
      std::fputc(']', f);
    }
    std::fputs("\n  ]\n}\n", f);
  }
  if (std::ferror(f)) throw FormatError("write failed for " + path);
}

PolicyFile read_policies(const std::string& path, const GameSpec& spec) {
  const json doc = load_json(path);
  try {
    if (!doc.is_object()) throw FormatError("policy file must hold a JSON object");
    if (doc.contains("schema") &&
        (!doc["schema"].is_string() || doc["schema"].get<std::string>() != kPolicySchema)) {
      throw FormatError(std::string("schema must be \"") + kPolicySchema + "\"");
    }
    const std::size_t S = spec.state_count;
    const std::size_t B = spec.adversary_actions;
    PolicyFile out;

    const json& team = field(doc, "team");
    if (!team.is_array() || team.size() != spec.team_count()) {
      throw FormatError("'team' must list one policy per team player");
    }
    std::vector<double> coords;
    for (std::size_t k = 0; k < spec.team_count(); ++k) {
      const std::size_t shape[] = {S, spec.team_sizes[k]};
      flatten(team[k], shape, "team", coords);
    }
    out.team = TeamPolicy(S, spec.team_sizes, std::move(coords));

    std::vector<double> adversary;
    const std::size_t shape[] = {S, B};
    flatten(field(doc, "adversary"), shape, "adversary", adversary);
    out.adversary = AdversaryPolicy(S, B, std::move(adversary));

    if (doc.contains("lambda")) {
      std::vector<double> lambda;
      flatten(doc["lambda"], shape, "lambda", lambda);
      out.lambda = std::move(lambda);
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": " + e.what());
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

void write_policies(const std::string& path, const TeamPolicy& team, const AdversaryPolicy& adversary,
                    const std::vector<double>* lambda) {
  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.c_str(), "w"));
  if (!file) throw FormatError("cannot write " + path);
  std::FILE* f = file.get();
  const std::size_t S = team.state_count();
  const std::size_t B = adversary.action_count();

  auto write_rows = [&](std::size_t rows, std::size_t cols, auto at) {
    std::fputc('[', f);
    for (std::size_t s = 0; s < rows; ++s) {
      std::fputs(s ? ", [" : "[", f);
      for (std::size_t a = 0; a < cols; ++a) {
        if (a) std::fputs(", ", f);
        write_number(f, at(s, a));
      }
      std::fputc(']', f);
    }
    std::fputc(']', f);
  };

  std::fprintf(f, "{\n  \"schema\": \"%s\",\n  \"team\": [", kPolicySchema);
  for (std::size_t k = 0; k < team.player_count(); ++k) {
    std::fputs(k ? ",\n    " : "\n    ", f);
    write_rows(S, team.team_sizes()[k], [&](std::size_t s, std::size_t a) { return team.prob(k, s, a); });
  }
  std::fputs("\n  ],\n  \"adversary\": ", f);
  write_rows(S, B, [&](std::size_t s, std::size_t b) { return adversary.prob(s, b); });
  if (lambda != nullptr) {
    std::fputs(",\n  \"lambda\": ", f);
    write_rows(S, B, [&](std::size_t s, std::size_t b) { return (*lambda)[s * B + b]; });
  }
  std::fputs("\n}\n", f);
  if (std::ferror(f)) throw FormatError("write failed for " + path);
}

}  // namespace atmg
