// Copyright 2026 The fedsim Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "fedsim/config.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "fedsim/errors.hpp"
#include "fedsim/text_io.hpp"

namespace fedsim {

using Split = ExperimentConfig::SplitSection;

std::string to_string(Split::Name name) {
  switch (name) {
    case Split::Name::kCountry: return "country";
    case Split::Name::kRainy: return "rainy";
    case Split::Name::kBus: return "bus";
    case Split::Name::kCustom: return "custom";
  }
  return "unknown";
}

namespace {

Split::Name split_from_string(const std::string& name) {
  if (name == "country") return Split::Name::kCountry;
  if (name == "rainy") return Split::Name::kRainy;
  if (name == "bus") return Split::Name::kBus;
  if (name == "custom") return Split::Name::kCustom;
  throw ConfigError("split.partition: unknown partition '" + name +
                    "' (expected country, rainy, bus or custom)");
}

struct Term {
  int axis;  // 0 weather, 1 viewpoint, 2 town
  int value;
};

// Parses "weather=1,town=6; viewpoint=4" into OR-of-AND clauses.
std::vector<std::vector<Term>> parse_custom(const std::string& expr) {
  std::vector<std::vector<Term>> clauses;
  for (auto clause_text : text::split(expr, ';')) {
    if (text::trim(clause_text).empty()) continue;
    std::vector<Term> clause;
    for (auto term_text : text::split(clause_text, ',')) {
      const auto kv = text::split(term_text, '=');
      if (kv.size() != 2) {
        throw ConfigError("split.custom: expected axis=value, got '" +
                          std::string(text::trim(term_text)) + "'");
      }
      const auto axis = text::trim(kv[0]);
      Term term{};
      if (axis == "weather") term.axis = 0;
      else if (axis == "viewpoint") term.axis = 1;
      else if (axis == "town") term.axis = 2;
      else throw ConfigError("split.custom: unknown axis '" + std::string(axis) + "'");
      auto v = text::parse_int(kv[1]);
      if (!v || *v < 0) {
        throw ConfigError("split.custom: bad index '" + std::string(text::trim(kv[1])) + "'");
      }
      term.value = static_cast<int>(*v);
      clause.push_back(term);
    }
    clauses.push_back(std::move(clause));
  }
  if (clauses.empty()) throw ConfigError("split.custom: empty predicate");
  return clauses;
}

int axis_value(const DomainKey& key, int axis) {
  return axis == 0 ? key.weather : axis == 1 ? key.viewpoint : key.town;
}

// ---------------------------------------------------------------------------
// Raw key/value table

struct Entry {
  std::string value;
  std::size_t line = 0;
  bool used = false;
};

class Table {
 public:
  void set(const std::string& section, const std::string& key, std::string value,
           std::size_t line) {
    auto& slot = entries_[section][key];
    if (slot.line != 0) {
      throw ConfigError(section + "." + key + ": duplicate key on line " +
                        std::to_string(line));
    }
    slot = Entry{std::move(value), line, false};
  }

  const Entry* get(const std::string& section, const std::string& key) {
    auto s = entries_.find(section);
    if (s == entries_.end()) return nullptr;
    auto k = s->second.find(key);
    if (k == s->second.end()) return nullptr;
    k->second.used = true;
    return &k->second;
  }

  void reject_unused() const {
    for (const auto& [section, keys] : entries_) {
      for (const auto& [key, entry] : keys) {
        if (!entry.used) {
          throw ConfigError(section + "." + key + ": unknown key (line " +
                            std::to_string(entry.line) + ")");
        }
      }
    }
  }

 private:
  std::map<std::string, std::map<std::string, Entry>> entries_;
};

class Reader {
 public:
  explicit Reader(Table& table) : table_(table) {}

  template <typename Fn>
  void read(const std::string& section, const std::string& key, Fn&& assign) {
    if (const Entry* e = table_.get(section, key)) {
      try {
        assign(e->value);
      } catch (const ConfigError& err) {
        throw ConfigError(section + "." + key + ": " + err.what());
      }
    }
  }

  void integer(const std::string& s, const std::string& k, auto& out) {
    read(s, k, [&](const std::string& v) {
      auto x = text::parse_int(v);
      if (!x) throw ConfigError("expected an integer, got '" + v + "'");
      if constexpr (std::is_unsigned_v<std::remove_reference_t<decltype(out)>>) {
        if (*x < 0) throw ConfigError("must be non-negative");
      }
      out = static_cast<std::remove_reference_t<decltype(out)>>(*x);
    });
  }

  void real(const std::string& s, const std::string& k, double& out) {
    read(s, k, [&](const std::string& v) { out = to_real(v); });
  }

  void string(const std::string& s, const std::string& k, std::string& out) {
    read(s, k, [&](const std::string& v) { out = v; });
  }

  void boolean(const std::string& s, const std::string& k, bool& out) {
    read(s, k, [&](const std::string& v) {
      if (v == "true" || v == "1") out = true;
      else if (v == "false" || v == "0") out = false;
      else throw ConfigError("expected true or false, got '" + v + "'");
    });
  }

  static double to_real(const std::string& v) {
    auto x = text::parse_double(v);
    if (!x) throw ConfigError("expected a number, got '" + v + "'");
    return *x;
  }

  static std::vector<std::string> list(const std::string& v) {
    std::vector<std::string> out;
    if (text::trim(v).empty()) return out;
    for (auto item : text::split(v, ',')) out.emplace_back(text::trim(item));
    return out;
  }

 private:
  Table& table_;
};

}  // namespace

// ---------------------------------------------------------------------------

ExperimentConfig parse_config(const std::string& contents,
                              const std::filesystem::path& base_dir) {
  Table table;
  std::string section;
  std::size_t line_no = 0;
  static const std::set<std::string> kSections{
      "dataset", "split", "distribution", "model", "federation", "evaluation",
      "experiment"};
  for (auto raw : text::split(contents, '\n')) {
    ++line_no;
    auto line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = text::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("line " + std::to_string(line_no) + ": malformed section header");
      }
      section = std::string(text::trim(line.substr(1, line.size() - 2)));
      if (!kSections.contains(section)) {
        throw ConfigError("line " + std::to_string(line_no) + ": unknown section [" +
                          section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    if (section.empty()) {
      throw ConfigError("line " + std::to_string(line_no) + ": key outside any section");
    }
    table.set(section, std::string(text::trim(line.substr(0, eq))),
              std::string(text::trim(line.substr(eq + 1))), line_no);
  }

  ExperimentConfig c;
  Reader r(table);
  auto& ds = c.dataset;
  auto& syn = ds.synthetic;

  r.read("dataset", "source", [&](const std::string& v) {
    if (v == "synthetic") ds.source = ExperimentConfig::DatasetSection::Source::kSynthetic;
    else if (v == "manifest") ds.source = ExperimentConfig::DatasetSection::Source::kManifest;
    else throw ConfigError("expected synthetic or manifest, got '" + v + "'");
  });
  r.read("dataset", "manifest", [&](const std::string& v) {
    std::filesystem::path p(v);
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    ds.manifest = std::filesystem::absolute(p).lexically_normal().string();
  });
  r.read("dataset", "grid", [&](const std::string& v) {
    const auto dims = Reader::list(v);
    if (dims.size() != 3) throw ConfigError("expected weathers,viewpoints,towns");
    int out[3];
    for (int k = 0; k < 3; ++k) {
      auto x = text::parse_int(dims[k]);
      if (!x) throw ConfigError("bad grid dimension '" + dims[k] + "'");
      out[k] = static_cast<int>(*x);
    }
    syn.grid = {out[0], out[1], out[2]};
  });
  r.integer("dataset", "images_per_domain", syn.images_per_domain);
  r.integer("dataset", "height", syn.height);
  r.integer("dataset", "width", syn.width);
  r.integer("dataset", "feature_dim", syn.feature_dim);
  r.integer("dataset", "n_classes", syn.n_classes);
  r.integer("dataset", "block_size", syn.block_size);
  r.real("dataset", "class_separation", syn.class_separation);
  r.real("dataset", "domain_shift", syn.domain_shift);
  r.real("dataset", "noise_std", syn.noise_std);
  r.real("dataset", "ignore_block_prob", syn.ignore_block_prob);
  r.read("dataset", "class_weights", [&](const std::string& v) {
    syn.class_weights.clear();
    for (const auto& item : Reader::list(v)) syn.class_weights.push_back(Reader::to_real(item));
  });
  r.integer("dataset", "zeroed_per_town", syn.zeroed_per_town);
  r.read("dataset", "zeroed_by_domain", [&](const std::string& v) {
    syn.zeroed_by_domain.clear();
    for (auto domain : text::split(v, ';')) {
      std::vector<int> classes;
      for (auto token : text::split_whitespace(domain)) {
        auto x = text::parse_int(token);
        if (!x) throw ConfigError("bad class index '" + std::string(token) + "'");
        classes.push_back(static_cast<int>(*x));
      }
      syn.zeroed_by_domain.push_back(std::move(classes));
    }
  });
  r.integer("dataset", "seed", syn.seed);

  r.read("split", "partition", [&](const std::string& v) { c.split.partition = split_from_string(v); });
  r.integer("split", "seen_per_domain", c.split.seen_per_domain);
  r.integer("split", "country_town", c.split.country_town);
  r.integer("split", "rainy_weather", c.split.rainy_weather);
  r.integer("split", "bus_viewpoint", c.split.bus_viewpoint);
  r.string("split", "custom", c.split.custom);

  auto& dist = c.distribution;
  r.read("distribution", "kind", [&](const std::string& v) { dist.kind = distribution_from_string(v); });
  r.read("distribution", "n_clients", [&](const std::string& v) {
    auto x = text::parse_int(v);
    if (!x || *x < 1) throw ConfigError("expected a positive integer, got '" + v + "'");
    dist.n_clients = static_cast<std::size_t>(*x);
    dist.explicit_plan = true;
  });
  r.read("distribution", "size_plan", [&](const std::string& v) {
    if (v == "equal") dist.size_mode.kind = SizeMode::Kind::kEqual;
    else if (v == "range") dist.size_mode.kind = SizeMode::Kind::kRange;
    else throw ConfigError("expected equal or range, got '" + v + "'");
    dist.explicit_plan = true;
  });
  bool has_min = false, has_max = false;
  r.read("distribution", "size_min", [&](const std::string& v) {
    auto x = text::parse_int(v);
    if (!x || *x < 1) throw ConfigError("expected a positive integer, got '" + v + "'");
    dist.size_mode.min = static_cast<std::size_t>(*x);
    dist.explicit_plan = has_min = true;
  });
  r.read("distribution", "size_max", [&](const std::string& v) {
    auto x = text::parse_int(v);
    if (!x || *x < 1) throw ConfigError("expected a positive integer, got '" + v + "'");
    dist.size_mode.max = static_cast<std::size_t>(*x);
    dist.explicit_plan = has_max = true;
  });
  if (dist.size_mode.kind == SizeMode::Kind::kRange && !(has_min && has_max)) {
    throw ConfigError("distribution.size_plan: range needs size_min and size_max");
  }
  if (dist.size_mode.kind == SizeMode::Kind::kEqual && (has_min || has_max)) {
    throw ConfigError("distribution.size_min: only valid with size_plan = range");
  }

  r.integer("model", "hidden", c.model.hidden);
  r.real("model", "bn_momentum", c.model.bn_momentum);

  auto& fed = c.federation;
  r.integer("federation", "rounds", fed.rounds);
  r.integer("federation", "clients_per_round", fed.clients_per_round);
  r.integer("federation", "local_epochs", fed.local_epochs);
  r.integer("federation", "batch_size", fed.batch_size);
  r.real("federation", "local_lr", fed.local_lr);
  r.boolean("federation", "silobn", fed.silobn);
  r.string("federation", "transform", fed.transform);
  r.read("federation", "optimizer", [&](const std::string& v) { fed.optimizer = server_opt_from_string(v); });
  r.read("federation", "server_lr", [&](const std::string& v) {
    fed.server_lrs.clear();
    for (const auto& item : Reader::list(v)) fed.server_lrs.push_back(Reader::to_real(item));
  });
  r.real("federation", "fedavgm_momentum", fed.fedavgm_momentum);
  r.real("federation", "adam_beta1", fed.adam_beta1);
  r.real("federation", "adam_beta2", fed.adam_beta2);
  r.real("federation", "adam_eps", fed.adam_eps);
  r.real("federation", "adagrad_eps", fed.adagrad_eps);

  r.read("evaluation", "strategies", [&](const std::string& v) {
    c.evaluation.strategies.clear();
    for (const auto& item : Reader::list(v)) c.evaluation.strategies.push_back(strategy_from_string(item));
  });
  r.read("evaluation", "splits", [&](const std::string& v) { c.evaluation.splits = Reader::list(v); });
  r.string("evaluation", "unvisited", c.evaluation.unvisited);

  r.read("experiment", "seeds", [&](const std::string& v) {
    c.seeds.clear();
    for (const auto& item : Reader::list(v)) {
      auto x = text::parse_int(item);
      if (!x || *x < 0) throw ConfigError("bad seed '" + item + "'");
      c.seeds.push_back(static_cast<std::uint64_t>(*x));
    }
  });
  r.string("experiment", "output", c.output);

  table.reject_unused();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string contents;
  try {
    contents = text::read_file(path);
  } catch (const IngestionError& e) {
    throw ConfigError(e.what());
  }
  return parse_config(contents, path.parent_path());
}

std::string serialize_config(const ExperimentConfig& c) {
  using text::format_double;
  const auto& syn = c.dataset.synthetic;
  std::string out;
  auto kv = [&](const std::string& key, const std::string& value) {
    out += key + " = " + value + "\n";
  };
  auto ints = [](const auto& v) {
    return text::join(v, ",", [](auto x) { return std::to_string(x); });
  };

  out += "[dataset]\n";
  kv("source", c.dataset.source == ExperimentConfig::DatasetSection::Source::kSynthetic
                   ? "synthetic" : "manifest");
  if (!c.dataset.manifest.empty()) kv("manifest", c.dataset.manifest);
  kv("grid", std::to_string(syn.grid.n_weathers) + "," +
                 std::to_string(syn.grid.n_viewpoints) + "," +
                 std::to_string(syn.grid.n_towns));
  kv("images_per_domain", std::to_string(syn.images_per_domain));
  kv("height", std::to_string(syn.height));
  kv("width", std::to_string(syn.width));
  kv("feature_dim", std::to_string(syn.feature_dim));
  kv("n_classes", std::to_string(syn.n_classes));
  kv("block_size", std::to_string(syn.block_size));
  kv("class_separation", format_double(syn.class_separation));
  kv("domain_shift", format_double(syn.domain_shift));
  kv("noise_std", format_double(syn.noise_std));
  kv("ignore_block_prob", format_double(syn.ignore_block_prob));
  kv("class_weights", text::join(syn.class_weights, ",", format_double));
  kv("zeroed_per_town", std::to_string(syn.zeroed_per_town));
  if (!syn.zeroed_by_domain.empty()) {
    kv("zeroed_by_domain", text::join(syn.zeroed_by_domain, ";", [](const auto& classes) {
         return text::join(classes, " ", [](int x) { return std::to_string(x); });
       }));
  }
  kv("seed", std::to_string(syn.seed));

  out += "\n[split]\n";
  kv("partition", to_string(c.split.partition));
  kv("seen_per_domain", std::to_string(c.split.seen_per_domain));
  kv("country_town", std::to_string(c.split.country_town));
  kv("rainy_weather", std::to_string(c.split.rainy_weather));
  kv("bus_viewpoint", std::to_string(c.split.bus_viewpoint));
  if (!c.split.custom.empty()) kv("custom", c.split.custom);

  out += "\n[distribution]\n";
  kv("kind", to_string(c.distribution.kind));
  if (c.distribution.explicit_plan) {
    if (c.distribution.n_clients > 0) kv("n_clients", std::to_string(c.distribution.n_clients));
    if (c.distribution.size_mode.kind == SizeMode::Kind::kRange) {
      kv("size_plan", "range");
      kv("size_min", std::to_string(c.distribution.size_mode.min));
      kv("size_max", std::to_string(c.distribution.size_mode.max));
    } else {
      kv("size_plan", "equal");
    }
  }

  out += "\n[model]\n";
  kv("hidden", std::to_string(c.model.hidden));
  kv("bn_momentum", format_double(c.model.bn_momentum));

  const auto& fed = c.federation;
  out += "\n[federation]\n";
  kv("rounds", std::to_string(fed.rounds));
  kv("clients_per_round", std::to_string(fed.clients_per_round));
  kv("local_epochs", std::to_string(fed.local_epochs));
  kv("batch_size", std::to_string(fed.batch_size));
  kv("local_lr", format_double(fed.local_lr));
  kv("silobn", fed.silobn ? "true" : "false");
  kv("transform", fed.transform);
  kv("optimizer", to_string(fed.optimizer));
  kv("server_lr", text::join(fed.server_lrs, ",", format_double));
  kv("fedavgm_momentum", format_double(fed.fedavgm_momentum));
  kv("adam_beta1", format_double(fed.adam_beta1));
  kv("adam_beta2", format_double(fed.adam_beta2));
  kv("adam_eps", format_double(fed.adam_eps));
  kv("adagrad_eps", format_double(fed.adagrad_eps));

  out += "\n[evaluation]\n";
  kv("strategies", text::join(c.evaluation.strategies, ",",
                              [](Strategy s) { return to_string(s); }));
  kv("splits", text::join(c.evaluation.splits, ",", [](const std::string& s) { return s; }));
  kv("unvisited", c.evaluation.unvisited);

  out += "\n[experiment]\n";
  kv("seeds", ints(c.seeds));
  kv("output", c.output);
  return out;
}

// ---------------------------------------------------------------------------
// Validation

DomainPredicate ExperimentConfig::unseen_predicate(const GridDims& grid) const {
  auto pick = [](int configured, int axis_size) {
    return configured >= 0 ? configured : axis_size - 1;
  };
  switch (split.partition) {
    case Split::Name::kCountry: {
      const int town = pick(split.country_town, grid.n_towns);
      return [town](const DomainKey& k) { return k.town == town; };
    }
    case Split::Name::kRainy: {
      const int weather = pick(split.rainy_weather, grid.n_weathers);
      return [weather](const DomainKey& k) { return k.weather == weather; };
    }
    case Split::Name::kBus: {
      const int viewpoint = pick(split.bus_viewpoint, grid.n_viewpoints);
      return [viewpoint](const DomainKey& k) { return k.viewpoint == viewpoint; };
    }
    case Split::Name::kCustom: {
      auto clauses = parse_custom(split.custom);
      return [clauses](const DomainKey& k) {
        return std::any_of(clauses.begin(), clauses.end(), [&](const auto& clause) {
          return std::all_of(clause.begin(), clause.end(), [&](const Term& t) {
            return axis_value(k, t.axis) == t.value;
          });
        });
      };
    }
  }
  throw ConfigError("split.partition: unhandled partition");
}

void ExperimentConfig::validate() const {
  const bool synthetic =
      dataset.source == DatasetSection::Source::kSynthetic;
  if (synthetic) {
    dataset.synthetic.validate();
  } else {
    if (dataset.manifest.empty()) throw ConfigError("dataset.manifest: required for source = manifest");
    if (dataset.synthetic.n_classes < 1) throw ConfigError("dataset.n_classes: must be >= 1");
  }
  if (split.seen_per_domain < 0) throw ConfigError("split.seen_per_domain: must be >= 0");
  if (split.partition == Split::Name::kCustom) parse_custom(split.custom);
  else if (!split.custom.empty()) throw ConfigError("split.custom: only valid with partition = custom");

  if (distribution.kind == DistributionKind::kHeterogeneous && distribution.explicit_plan) {
    throw ConfigError("distribution.n_clients: heterogeneous distribution forbids explicit size plans");
  }
  const bool by_domain =
      std::find(evaluation.strategies.begin(), evaluation.strategies.end(),
                Strategy::kByDomain) != evaluation.strategies.end();
  if (by_domain && distribution.kind != DistributionKind::kHeterogeneous) {
    throw ConfigError("evaluation.strategies: by_domain requires the heterogeneous distribution");
  }
  if (evaluation.strategies.empty()) throw ConfigError("evaluation.strategies: must not be empty");
  if (evaluation.splits.empty()) throw ConfigError("evaluation.splits: must not be empty");
  for (const auto& s : evaluation.splits) {
    if (s != "seen" && s != "unseen") {
      throw ConfigError("evaluation.splits: unknown split '" + s + "' (expected seen or unseen)");
    }
  }
  if (evaluation.unvisited != "calibrate" && evaluation.unvisited != "error") {
    throw ConfigError("evaluation.unvisited: expected calibrate or error");
  }

  if (model.hidden < 1) throw ConfigError("model.hidden: must be >= 1");
  if (!(model.bn_momentum > 0.0 && model.bn_momentum <= 1.0)) {
    throw ConfigError("model.bn_momentum: must lie in (0, 1]");
  }
  if (federation.rounds < 1) throw ConfigError("federation.rounds: must be >= 1");
  if (federation.clients_per_round < 1) throw ConfigError("federation.clients_per_round: must be >= 1");
  if (federation.local_epochs < 1) throw ConfigError("federation.local_epochs: must be >= 1");
  if (federation.batch_size < 2) throw ConfigError("federation.batch_size: must be >= 2");
  if (!(federation.local_lr >= 0.0)) throw ConfigError("federation.local_lr: must be >= 0");
  if (federation.server_lrs.empty()) throw ConfigError("federation.server_lr: must not be empty");
  for (double lr : federation.server_lrs) {
    if (!(lr > 0.0)) throw ConfigError("federation.server_lr: every rate must be > 0");
  }
  transform_by_name(federation.transform);
  if (seeds.empty()) throw ConfigError("experiment.seeds: must not be empty");
  if (output.empty()) throw ConfigError("experiment.output: must not be empty");

  if (!synthetic) return;

  // Counts implied by the synthetic grid, checked before any data is built.
  const auto& syn = dataset.synthetic;
  const auto check_axis = [](int v, int size, const char* field) {
    if (v >= size) {
      throw ConfigError(std::string("split.") + field + ": index outside the grid");
    }
  };
  check_axis(split.country_town, syn.grid.n_towns, "country_town");
  check_axis(split.rainy_weather, syn.grid.n_weathers, "rainy_weather");
  check_axis(split.bus_viewpoint, syn.grid.n_viewpoints, "bus_viewpoint");
  const auto unseen = unseen_predicate(syn.grid);
  std::size_t retained = 0;
  for (std::size_t d = 0; d < syn.grid.domain_count(); ++d) {
    if (!unseen(syn.grid.key_at(d))) ++retained;
  }
  if (retained == 0) throw ConfigError("split.partition: every domain is unseen; no training data");
  if (split.seen_per_domain > 0 && syn.images_per_domain < split.seen_per_domain + 1) {
    throw ConfigError("split.seen_per_domain: needs images_per_domain >= seen_per_domain + 1");
  }
  const std::size_t n_train =
      retained * static_cast<std::size_t>(syn.images_per_domain - split.seen_per_domain);
  const std::size_t n_clients =
      distribution.kind == DistributionKind::kHeterogeneous || distribution.n_clients == 0
          ? retained
          : distribution.n_clients;
  if (federation.clients_per_round > n_clients) {
    throw ConfigError("federation.clients_per_round: " +
                      std::to_string(federation.clients_per_round) + " exceeds the " +
                      std::to_string(n_clients) + " clients");
  }
  if (distribution.kind != DistributionKind::kHeterogeneous) {
    const auto& mode = distribution.size_mode;
    if (mode.kind == SizeMode::Kind::kRange) {
      if (mode.min > mode.max || n_clients * mode.min > n_train ||
          n_clients * mode.max < n_train) {
        throw ConfigError("distribution.size_min: range infeasible for " +
                          std::to_string(n_train) + " training samples");
      }
    } else if (n_train < n_clients) {
      throw ConfigError("distribution.n_clients: more clients than training samples");
    }
  }
}

}  // namespace fedsim
