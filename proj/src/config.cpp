#include "affect/config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "affect/error.hpp"

namespace affect {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("key " + key + ": not a number: " + v);
  }
}

long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long i = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw ConfigError("key " + key + ": not an integer: " + v);
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("key " + key + ": expected true or false, got " + v);
}

Schema parse_schema(const std::string& key, const std::string& v) {
  Schema schema;
  for (const auto& part : split(v, ',')) {
    const auto colon = part.find(':');
    if (colon == std::string::npos) {
      throw ConfigError("key " + key + ": expected name:dim, got " + part);
    }
    schema.groups.push_back(
        {trim(part.substr(0, colon)),
         static_cast<int>(parse_int(key, trim(part.substr(colon + 1))))});
  }
  return schema;
}

}  // namespace

WindowConfig PipelineConfig::window_config(double fps) const {
  WindowConfig w;
  w.terms = {{"short", term_short}};
  if (use_3s_term) w.terms.push_back({"mid3", 3.0});
  w.terms.push_back({"middle", term_middle});
  w.terms.push_back({"long", term_long});
  w.stride = stride;
  w.fps = fps;
  return w;
}

StackingConfig PipelineConfig::stacking_config() const {
  StackingConfig s;
  s.params = params;
  s.feature_selection = feature_selection;
  s.feature_fraction = feature_fraction;
  s.folds = folds;
  return s;
}

void PipelineConfig::validate() const {
  data_schema.validate();
  params.validate();
  if (stride <= 0) throw ConfigError("stride must be positive");
  if (term_short <= 0 || term_middle <= 0 || term_long <= 0) {
    throw ConfigError("term lengths must be positive");
  }
  if (folds < 2) throw ConfigError("folds must be at least 2");
  if (feature_fraction <= 0 || feature_fraction > 1) {
    throw ConfigError("feature_fraction must be in (0, 1]");
  }
  if (tasks.empty()) throw ConfigError("tasks must not be empty");
  for (const auto& [group, dims] : pca_dims) {
    if (data_schema.group_index(group) < 0) {
      throw ConfigError("pca_dims names unknown group " + group);
    }
    if (dims < 1) throw ConfigError("pca_dims for " + group + " must be >= 1");
  }
  for (int r : balance_center_regions) {
    if (r < 0 || r > 63) {
      throw ConfigError("balance_center_regions entries must be in 0..63");
    }
  }
}

PipelineConfig parse_config_text(const std::string& text) {
  PipelineConfig cfg;
  std::set<std::string> seen;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) +
                        ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) {
      throw ConfigError("duplicate key " + key);
    }

    if (key == "corpus_dir") {
      cfg.corpus_dir = value;
    } else if (key == "work_dir") {
      cfg.work_dir = value;
    } else if (key == "groups") {
      cfg.data_schema = parse_schema(key, value);
    } else if (key == "tasks") {
      cfg.tasks.clear();
      for (const auto& t : split(value, ',')) {
        cfg.tasks.push_back(task_from_name(t));
      }
    } else if (key == "term_short") {
      cfg.term_short = parse_double(key, value);
    } else if (key == "term_middle") {
      cfg.term_middle = parse_double(key, value);
    } else if (key == "term_long") {
      cfg.term_long = parse_double(key, value);
    } else if (key == "use_3s_term") {
      cfg.use_3s_term = parse_bool(key, value);
    } else if (key == "stride") {
      cfg.stride = parse_double(key, value);
    } else if (key == "balance") {
      cfg.balance = parse_bool(key, value);
    } else if (key == "balance_center_regions") {
      cfg.balance_center_regions.clear();
      for (const auto& r : split(value, ',')) {
        cfg.balance_center_regions.push_back(
            static_cast<int>(parse_int(key, r)));
      }
    } else if (key == "balance_seed") {
      cfg.balance_seed = parse_int(key, value);
    } else if (key == "pca_dims") {
      cfg.pca_dims.clear();
      if (!value.empty()) {
        for (const auto& g : parse_schema(key, value).groups) {
          cfg.pca_dims.emplace_back(g.name, g.dim);
        }
      }
    } else if (key == "num_leaves") {
      cfg.params.num_leaves = static_cast<int>(parse_int(key, value));
    } else if (key == "learning_rate") {
      cfg.params.learning_rate = parse_double(key, value);
    } else if (key == "max_depth") {
      cfg.params.max_depth = static_cast<int>(parse_int(key, value));
    } else if (key == "min_child_samples") {
      cfg.params.min_child_samples = static_cast<int>(parse_int(key, value));
    } else if (key == "num_rounds") {
      cfg.params.num_rounds = static_cast<int>(parse_int(key, value));
    } else if (key == "early_stopping_rounds") {
      cfg.params.early_stopping_rounds =
          static_cast<int>(parse_int(key, value));
    } else if (key == "lambda_l2") {
      cfg.params.lambda_l2 = parse_double(key, value);
    } else if (key == "seed") {
      cfg.params.seed = parse_int(key, value);
    } else if (key == "parallel") {
      cfg.params.parallel = parse_bool(key, value);
    } else if (key == "feature_selection") {
      cfg.feature_selection = parse_bool(key, value);
    } else if (key == "feature_fraction") {
      cfg.feature_fraction = parse_double(key, value);
    } else if (key == "folds") {
      cfg.folds = static_cast<int>(parse_int(key, value));
    } else if (key == "fold_seed") {
      cfg.fold_seed = parse_int(key, value);
    } else if (key == "grid_num_leaves") {
      cfg.grid.num_leaves.clear();
      for (const auto& v : split(value, ','))
        cfg.grid.num_leaves.push_back(static_cast<int>(parse_int(key, v)));
    } else if (key == "grid_learning_rate") {
      cfg.grid.learning_rate.clear();
      for (const auto& v : split(value, ','))
        cfg.grid.learning_rate.push_back(parse_double(key, v));
    } else if (key == "grid_max_depth") {
      cfg.grid.max_depth.clear();
      for (const auto& v : split(value, ','))
        cfg.grid.max_depth.push_back(static_cast<int>(parse_int(key, v)));
    } else if (key == "grid_min_child_samples") {
      cfg.grid.min_child_samples.clear();
      for (const auto& v : split(value, ','))
        cfg.grid.min_child_samples.push_back(
            static_cast<int>(parse_int(key, v)));
    } else if (key == "synth_videos") {
      cfg.synth.videos = static_cast<int>(parse_int(key, value));
    } else if (key == "synth_val_videos") {
      cfg.synth.val_videos = static_cast<int>(parse_int(key, value));
    } else if (key == "synth_duration") {
      cfg.synth.duration = parse_double(key, value);
    } else if (key == "synth_fps") {
      cfg.synth.fps = parse_double(key, value);
    } else if (key == "synth_seed") {
      cfg.synth.seed = parse_int(key, value);
    } else if (key == "synth_noise") {
      cfg.synth.feature_noise = parse_double(key, value);
    } else {
      throw ConfigError("unknown key " + key);
    }
  }
  cfg.synth.schema = cfg.data_schema;
  cfg.source_text = text;
  cfg.validate();
  return cfg;
}

PipelineConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

}  // namespace affect
