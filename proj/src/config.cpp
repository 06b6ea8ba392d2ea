#include "vsr/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace vsr {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

int parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    int x = std::stoi(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' needs an integer, got '" + v + "'");
  }
}

std::int64_t parse_i64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    std::int64_t x = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' needs an integer, got '" + v + "'");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    std::uint64_t x = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' needs an unsigned integer, got '" + v + "'");
  }
}

double parse_real(const std::string& key, const std::string& v) {
  const char* begin = v.c_str();
  char* end = nullptr;
  double x = std::strtod(begin, &end);
  if (end != begin + v.size() || v.empty())
    throw ConfigError("config: key '" + key + "' needs a number, got '" + v + "'");
  return x;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "0" || v == "false") return false;
  if (v == "1" || v == "true") return true;
  throw ConfigError("config: key '" + key + "' needs 0/1/false/true, got '" + v + "'");
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  if (trim(v).empty()) return out;  // explicit empty list
  std::istringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ','))
    out.push_back(parse_int(key, trim(item)));
  return out;
}

std::string join_int_list(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

}  // namespace

const char* to_string(PixelLossKind k) {
  return k == PixelLossKind::kCharbonnier ? "charbonnier" : "l2";
}

const char* to_string(GanMode m) {
  return m == GanMode::kMinimax ? "minimax" : "nonsaturating";
}

PixelLossKind pixel_loss_from_string(const std::string& s) {
  if (s == "charbonnier") return PixelLossKind::kCharbonnier;
  if (s == "l2") return PixelLossKind::kL2;
  throw ConfigError("config: pixel loss must be charbonnier|l2, got '" + s + "'");
}

GanMode gan_mode_from_string(const std::string& s) {
  if (s == "minimax") return GanMode::kMinimax;
  if (s == "nonsaturating") return GanMode::kNonsaturating;
  throw ConfigError("config: gan mode must be minimax|nonsaturating, got '" + s + "'");
}

RunConfig parse_run_config(const std::string& text) {
  RunConfig c;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));

    TrainConfig& t = c.train;
    if (key == "train.scale") t.scale = parse_int(key, val);
    else if (key == "train.batch_size") t.batch_size = parse_int(key, val);
    else if (key == "train.pretrain_epochs") t.pretrain_epochs = parse_int(key, val);
    else if (key == "train.pretrain_lr") t.pretrain_lr = parse_real(key, val);
    else if (key == "train.lr_drop_epochs") t.lr_drop_epochs = parse_int_list(key, val);
    else if (key == "train.lr_drop_factor") t.lr_drop_factor = parse_real(key, val);
    else if (key == "train.gan_epochs") t.gan_epochs = parse_int(key, val);
    else if (key == "train.gan_lr") t.gan_lr = parse_real(key, val);
    else if (key == "train.weight_decay_g") t.weight_decay_g = parse_real(key, val);
    else if (key == "train.weight_decay_d") t.weight_decay_d = parse_real(key, val);
    else if (key == "train.adam_beta1") t.adam_beta1 = parse_real(key, val);
    else if (key == "train.adam_beta2") t.adam_beta2 = parse_real(key, val);
    else if (key == "train.adam_eps") t.adam_eps = parse_real(key, val);
    else if (key == "train.seed") t.seed = parse_u64(key, val);
    else if (key == "train.d_steps_per_g_step") t.d_steps_per_g_step = parse_int(key, val);
    else if (key == "train.pixel_loss") t.pixel_loss = pixel_loss_from_string(val);
    else if (key == "train.gan_mode") t.gan_mode = gan_mode_from_string(val);
    else if (key == "train.checkpoint_every") t.checkpoint_every = parse_int(key, val);
    else if (key == "train.max_steps") t.max_steps = parse_i64(key, val);
    else if (key == "train.deterministic") t.deterministic = parse_bool(key, val);
    else if (key == "loss.alpha") t.loss_weights.alpha = parse_real(key, val);
    else if (key == "loss.beta") t.loss_weights.beta = parse_real(key, val);
    else if (key == "loss.epsilon") t.loss_weights.epsilon = parse_real(key, val);
    else if (key == "gen.input_frames") c.gen.input_frames = parse_int(key, val);
    else if (key == "gen.base_channels") c.gen.base_channels = parse_int(key, val);
    else if (key == "gen.num_res_blocks") c.gen.num_res_blocks = parse_int(key, val);
    else if (key == "gen.kernel") c.gen.kernel = parse_int(key, val);
    else if (key == "gen.patch_size") c.gen.patch_size = parse_int(key, val);
    else if (key == "disc.conv_channels") c.disc.conv_channels = parse_int_list(key, val);
    else if (key == "disc.kernel") c.disc.kernel = parse_int(key, val);
    else if (key == "disc.stride") c.disc.stride = parse_int(key, val);
    else if (key == "disc.leaky_slope") c.disc.leaky_slope = parse_real(key, val);
    else if (key == "disc.input_size") c.disc.input_size = parse_int(key, val);
    else if (key == "feat.channels") c.feat.channels = parse_int_list(key, val);
    else if (key == "feat.pool_after") c.feat.pool_after = parse_int_list(key, val);
    else if (key == "feat.taps") c.feat.taps = parse_int_list(key, val);
    else if (key == "feat.seed") c.feat.seed = parse_u64(key, val);
    else if (key == "feat.weight_file") c.feat.weight_file = val;
    else if (key == "data") c.data_path = val;
    else throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
  }

  c.train.validate();
  c.gen.validate();
  // the one-block-free degenerate network is reachable programmatically but
  // makes no sense as a run configuration
  if (c.gen.num_res_blocks < 1)
    throw ConfigError("config: gen.num_res_blocks must be >= 1");
  c.disc.validate();
  c.feat.validate();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_run_config(ss.str());
}

std::string serialize_run_config(const RunConfig& c) {
  std::ostringstream os;
  const TrainConfig& t = c.train;
  os << "# training run configuration\n";
  os << "train.scale = " << t.scale << '\n';
  os << "train.batch_size = " << t.batch_size << '\n';
  os << "train.pretrain_epochs = " << t.pretrain_epochs << '\n';
  os << "train.pretrain_lr = " << format_double(t.pretrain_lr) << '\n';
  os << "train.lr_drop_epochs = " << join_int_list(t.lr_drop_epochs) << '\n';
  os << "train.lr_drop_factor = " << format_double(t.lr_drop_factor) << '\n';
  os << "train.gan_epochs = " << t.gan_epochs << '\n';
  os << "train.gan_lr = " << format_double(t.gan_lr) << '\n';
  os << "train.weight_decay_g = " << format_double(t.weight_decay_g) << '\n';
  os << "train.weight_decay_d = " << format_double(t.weight_decay_d) << '\n';
  os << "train.adam_beta1 = " << format_double(t.adam_beta1) << '\n';
  os << "train.adam_beta2 = " << format_double(t.adam_beta2) << '\n';
  os << "train.adam_eps = " << format_double(t.adam_eps) << '\n';
  os << "train.seed = " << t.seed << '\n';
  os << "train.d_steps_per_g_step = " << t.d_steps_per_g_step << '\n';
  os << "train.pixel_loss = " << to_string(t.pixel_loss) << '\n';
  os << "train.gan_mode = " << to_string(t.gan_mode) << '\n';
  os << "train.checkpoint_every = " << t.checkpoint_every << '\n';
  os << "train.max_steps = " << t.max_steps << '\n';
  os << "train.deterministic = " << (t.deterministic ? 1 : 0) << '\n';
  os << "loss.alpha = " << format_double(t.loss_weights.alpha) << '\n';
  os << "loss.beta = " << format_double(t.loss_weights.beta) << '\n';
  os << "loss.epsilon = " << format_double(t.loss_weights.epsilon) << '\n';
  os << "gen.input_frames = " << c.gen.input_frames << '\n';
  os << "gen.base_channels = " << c.gen.base_channels << '\n';
  os << "gen.num_res_blocks = " << c.gen.num_res_blocks << '\n';
  os << "gen.kernel = " << c.gen.kernel << '\n';
  os << "gen.patch_size = " << c.gen.patch_size << '\n';
  os << "disc.conv_channels = " << join_int_list(c.disc.conv_channels) << '\n';
  os << "disc.kernel = " << c.disc.kernel << '\n';
  os << "disc.stride = " << c.disc.stride << '\n';
  os << "disc.leaky_slope = " << format_double(c.disc.leaky_slope) << '\n';
  os << "disc.input_size = " << c.disc.input_size << '\n';
  os << "feat.channels = " << join_int_list(c.feat.channels) << '\n';
  os << "feat.pool_after = " << join_int_list(c.feat.pool_after) << '\n';
  os << "feat.taps = " << join_int_list(c.feat.taps) << '\n';
  os << "feat.seed = " << c.feat.seed << '\n';
  if (!c.feat.weight_file.empty()) os << "feat.weight_file = " << c.feat.weight_file << '\n';
  if (!c.data_path.empty()) os << "data = " << c.data_path << '\n';
  return os.str();
}

}  // namespace vsr
