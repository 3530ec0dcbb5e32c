#include "pord/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <memory>
#include <sstream>

#include "pord/corruption.hpp"
#include "pord/filter_bank.hpp"
#include "pord/image_io.hpp"
#include "pord/pipeline.hpp"
#include "pord/synthetic.hpp"

namespace pord {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string normalize_key(std::string_view key) {
  std::string k(trim(key));
  for (char& c : k) c = c == '_' ? '-' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return k;
}

template <typename T>
T parse_number(std::string_view key, std::string_view text) {
  text = trim(text);
  T v{};
  const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw SpecError("bad value '" + std::string(text) + "' for " + std::string(key));
  }
  return v;
}

double parse_real(std::string_view key, std::string_view text) {
  const double v = parse_number<double>(key, text);
  if (!std::isfinite(v)) throw SpecError("value for " + std::string(key) + " must be finite");
  return v;
}

std::size_t parse_count(std::string_view key, std::string_view text) {
  return parse_number<std::size_t>(key, text);
}

bool parse_bool(std::string_view key, std::string_view text) {
  const std::string v = normalize_key(text);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw SpecError("bad boolean '" + std::string(text) + "' for " + std::string(key));
}

// Splits "k.2" into ("k", 2); a bare key gives index 0.
std::pair<std::string, std::size_t> split_index(const std::string& key) {
  const auto dot = key.rfind('.');
  if (dot == std::string::npos) return {key, 0};
  const std::string base = key.substr(0, dot);
  const std::size_t idx = parse_count(key, std::string_view(key).substr(dot + 1));
  if (idx == 0) throw SpecError("iteration index in '" + key + "' is 1-based");
  return {base, idx};
}

void apply_override(IterationOverride& o, const std::string& base, std::string_view value, const std::string& key) {
  if (base == "k") o.K = parse_count(key, value);
  else if (base == "patch-side") o.patch_side = parse_count(key, value);
  else if (base == "b") o.window = parse_count(key, value);
  else if (base == "c") o.C = parse_real(key, value);
  else if (base == "epsilon") o.epsilon = parse_real(key, value);
  else if (base == "l") o.filter_length = parse_count(key, value);
  else throw SpecError("unknown setting '" + key + "'");
}

bool is_iteration_key(const std::string& base) {
  return base == "k" || base == "patch-side" || base == "b" || base == "c" || base == "epsilon" || base == "l";
}

template <typename Row>
std::vector<Row> extend(std::vector<Row> rows, std::size_t count) {
  if (count == 0) throw SpecError("iterations must be >= 1");
  while (rows.size() < count) rows.push_back(rows.back());
  rows.resize(count);
  return rows;
}

}  // namespace

void ExperimentSpec::set(std::string_view key_text, std::string_view value_text) {
  const std::string key = normalize_key(key_text);
  const std::string_view value = trim(value_text);
  if (key == "name") name = value;
  else if (key == "protocol") {
    if (value != "denoise-table2" && value != "inpaint-table4" && value != "custom") {
      throw SpecError("unknown protocol '" + std::string(value) + "'");
    }
    protocol = value;
  } else if (key == "image") images.emplace_back(value);
  else if (key == "sigma") {
    sigma = parse_real(key, value);
    if (*sigma < 0) throw SpecError("sigma must be >= 0");
  } else if (key == "erase-fraction") {
    erase_fraction = parse_real(key, value);
    if (*erase_fraction < 0 || *erase_fraction > 1) throw SpecError("erase-fraction must lie in [0, 1]");
  } else if (key == "iterations") {
    iterations = parse_count(key, value);
    if (*iterations == 0) throw SpecError("iterations must be >= 1");
  } else if (key == "seed") seed = parse_number<std::uint64_t>(key, value);
  else if (key == "threads") threads = std::max<std::size_t>(1, parse_count(key, value));
  else if (key == "output-dir") output_dir = value;
  else if (key == "train") train.emplace_back(value);
  else if (key == "operator") {
    if (value != "identity" && value != "cubic" && value.rfind("moving-average:", 0) != 0) {
      throw SpecError("unknown operator '" + std::string(value) + "'");
    }
    if (value.rfind("moving-average:", 0) == 0 && parse_count(key, value.substr(15)) == 0) {
      throw SpecError("moving-average length must be >= 1");
    }
    op = value;
  } else if (key == "cubic") {
    if (value == "pchip") cubic = CubicKind::pchip;
    else if (value == "natural") cubic = CubicKind::natural_spline;
    else throw SpecError("unknown cubic kind '" + std::string(value) + "'");
  } else if (key == "reset-known") reset_known = parse_bool(key, value);
  else {
    const auto [base, idx] = split_index(key);
    if (base == "bank") {
      if (idx == 0) throw SpecError("bank needs an iteration index, e.g. bank.1");
      banks[idx] = value;
    } else if (is_iteration_key(base)) {
      apply_override(idx == 0 ? all_iterations : per_iteration[idx], base, value, key);
    } else {
      throw SpecError("unknown setting '" + key + "'");
    }
  }
}

std::size_t ExperimentSpec::iteration_count() const {
  if (iterations) return *iterations;
  if (protocol == "denoise-table2") return 2;
  if (protocol == "inpaint-table4") return 3;
  std::size_t n = 1;
  for (const auto& [idx, o] : per_iteration) n = std::max(n, idx);
  return n;
}

std::vector<DenoiseIteration> ExperimentSpec::denoise_schedule() const {
  auto rows = extend(default_denoise_schedule(sigma.value_or(25.0)), iteration_count());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (const IterationOverride* o : {&all_iterations, per_iteration.count(i + 1) ? &per_iteration.at(i + 1) : nullptr}) {
      if (!o) continue;
      if (o->K) rows[i].K = *o->K;
      if (o->patch_side) rows[i].patch_side = *o->patch_side;
      if (o->window) rows[i].window = *o->window;
      if (o->C) rows[i].C = *o->C;
      if (o->epsilon) rows[i].epsilon = *o->epsilon;
      if (o->filter_length) rows[i].filter_length = *o->filter_length;
    }
  }
  return rows;
}

std::vector<InpaintIteration> ExperimentSpec::inpaint_schedule() const {
  auto rows = extend(default_inpaint_schedule(), iteration_count());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (const IterationOverride* o : {&all_iterations, per_iteration.count(i + 1) ? &per_iteration.at(i + 1) : nullptr}) {
      if (!o) continue;
      if (o->K) rows[i].K = *o->K;
      if (o->patch_side) rows[i].patch_side = *o->patch_side;
      if (o->window) rows[i].window = *o->window;
      if (o->epsilon) rows[i].epsilon = *o->epsilon;
    }
  }
  return rows;
}

std::vector<ExperimentSpec> parse_experiments(std::istream& in) {
  std::vector<ExperimentSpec> out;
  bool open = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    std::string_view body = trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']') throw SpecError("line " + std::to_string(lineno) + ": unterminated block header");
      std::string_view inner = trim(body.substr(1, body.size() - 2));
      if (inner.rfind("experiment", 0) != 0) {
        throw SpecError("line " + std::to_string(lineno) + ": unknown block '" + std::string(inner) + "'");
      }
      out.emplace_back();
      out.back().name = trim(inner.substr(10));
      open = true;
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) throw SpecError("line " + std::to_string(lineno) + ": expected key = value");
    if (!open) {
      out.emplace_back();
      open = true;
    }
    try {
      out.back().set(body.substr(0, eq), body.substr(eq + 1));
    } catch (const SpecError& e) {
      throw SpecError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<ExperimentSpec> load_experiments(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_experiments(in);
}

Image resolve_image(const std::string& ref) {
  if (ref.rfind("synthetic:", 0) != 0) {
    try {
      return load_image(ref);
    } catch (const IoError& e) {
      throw AssetError(e.what());
    }
  }
  std::vector<std::string> parts;
  std::stringstream ss(ref);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  if (parts.size() == 4 && parts[1] == "dead-leaves") {
    const std::size_t size = parse_count("image", parts[2]);
    return dead_leaves(size, size, parse_number<std::uint64_t>("image", parts[3]));
  }
  if (parts.size() == 3 && parts[1] == "ramp") {
    const auto x = parts[2].find('x');
    if (x == std::string::npos) throw SpecError("ramp size must be <height>x<width>");
    return horizontal_ramp(parse_count("image", parts[2].substr(0, x)), parse_count("image", parts[2].substr(x + 1)));
  }
  throw SpecError("unknown synthetic image '" + ref + "'");
}

std::string image_label(const std::string& ref) {
  std::string label = ref.rfind("synthetic:", 0) == 0 ? ref.substr(10) : std::filesystem::path(ref).stem().string();
  for (char& c : label) {
    if (c == ',' || c == ':' || c == '"' || std::isspace(static_cast<unsigned char>(c))) c = '_';
  }
  return label;
}

namespace {

std::string format_double(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

}  // namespace

std::string to_csv(const Report& report) {
  std::string out = "image,sigma,iteration,psnr_db,wall_ms,distance_evals\n";
  for (const ReportRow& r : report.rows) {
    if (r.image.find_first_of(",\n") != std::string::npos) throw SpecError("image label contains a separator");
    out += r.image + ',' + format_double(r.sigma) + ',' + std::to_string(r.iteration) + ',' + format_double(r.psnr_db) +
           ',' + format_double(r.wall_ms) + ',' + std::to_string(r.distance_evals) + '\n';
  }
  return out;
}

Report parse_csv(std::string_view text) {
  Report report;
  std::size_t lineno = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++lineno;
    if (lineno == 1) {
      if (line != "image,sigma,iteration,psnr_db,wall_ms,distance_evals") throw FormatError("unexpected report header");
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    for (std::size_t start = 0;;) {
      const auto comma = line.find(',', start);
      f.push_back(line.substr(start, comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (f.size() != 6) throw FormatError("report line " + std::to_string(lineno) + " has " + std::to_string(f.size()) + " fields");
    try {
      ReportRow r;
      r.image = f[0];
      r.sigma = parse_number<double>("sigma", f[1]);
      r.iteration = parse_count("iteration", f[2]);
      r.psnr_db = parse_number<double>("psnr_db", f[3]);
      r.wall_ms = parse_number<double>("wall_ms", f[4]);
      r.distance_evals = parse_number<std::uint64_t>("distance_evals", f[5]);
      report.rows.push_back(std::move(r));
    } catch (const SpecError& e) {
      throw FormatError("report line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (lineno == 0) throw FormatError("empty report");
  return report;
}

void save_report(const std::filesystem::path& path, const Report& report) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_csv(report);
  if (!out) throw IoError("write failed for " + path.string());
}

Report load_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return parse_csv(text);
}

namespace {

std::vector<FilterBank> resolve_banks(const ExperimentSpec& spec, const std::vector<DenoiseIteration>& schedule,
                                      std::uint64_t train_seed) {
  const std::size_t iters = schedule.size();
  bool all_files = true;
  for (std::size_t i = 1; i <= iters; ++i) all_files = all_files && spec.banks.count(i);
  if (all_files) {
    std::vector<FilterBank> banks;
    for (std::size_t i = 1; i <= iters; ++i) {
      try {
        banks.push_back(load_filter_bank(spec.banks.at(i)));
      } catch (const IoError& e) {
        throw AssetError(e.what());
      }
    }
    return banks;
  }
  if (spec.train.empty()) {
    throw AssetError("denoise-table2 needs bank.1 .. bank." + std::to_string(iters) + " or train images");
  }
  std::vector<Image> clean;
  for (const auto& t : spec.train) clean.push_back(resolve_image(t));
  return train_denoiser(clean, *spec.sigma, schedule, {.seed = train_seed, .threads = spec.threads}).banks;
}

struct OutputSink {
  std::filesystem::path dir;
  std::string prefix;

  void save(const std::string& label, const std::string& suffix, const Image& img) const {
    if (dir.empty()) return;
    save_pgm(dir / (prefix + label + "_" + suffix + ".pgm"), img);
  }
};

}  // namespace

Report run_experiment(const ExperimentSpec& spec) {
  if (spec.images.empty()) throw SpecError("experiment lists no image");
  Rng master(spec.seed);
  OutputSink sink{spec.output_dir, spec.name.empty() ? "" : spec.name + "_"};
  if (!sink.dir.empty()) std::filesystem::create_directories(sink.dir);
  Report report;

  auto recorder = [&](const std::string& label, double sigma, const Image& clean) {
    return [&report, &sink, label, sigma, &clean](const IterationInfo& info) {
      report.rows.push_back({label, sigma, info.index + 1, psnr(clean, *info.estimate), info.wall_ms,
                             info.stats.distance_evals});
      sink.save(label, "iter" + std::to_string(info.index + 1), *info.estimate);
    };
  };

  if (spec.protocol == "denoise-table2") {
    if (!spec.sigma) throw SpecError("denoise-table2 needs sigma");
    const auto schedule = spec.denoise_schedule();
    const auto banks = resolve_banks(spec, schedule, master());
    for (const auto& ref : spec.images) {
      const Image clean = resolve_image(ref);
      const std::string label = image_label(ref);
      const std::uint64_t noise_seed = master(), run_seed = master();
      const Image z = corrupt(clean, CorruptionSpec::gaussian(*spec.sigma, noise_seed)).image;
      sink.save(label, "input", z);
      DenoiseOptions opts{.seed = run_seed, .threads = spec.threads, .on_iteration = recorder(label, *spec.sigma, clean)};
      denoise(z, *spec.sigma, banks, schedule, opts);
    }
  } else if (spec.protocol == "inpaint-table4") {
    const double fraction = spec.erase_fraction.value_or(0.8);
    const auto schedule = spec.inpaint_schedule();
    for (const auto& ref : spec.images) {
      const Image clean = resolve_image(ref);
      const std::string label = image_label(ref);
      const std::uint64_t mask_seed = master(), run_seed = master();
      const Corrupted c = corrupt(clean, CorruptionSpec::erasure(fraction, mask_seed));
      sink.save(label, "input", c.image);
      InpaintOptions opts;
      opts.seed = run_seed;
      opts.threads = spec.threads;
      opts.cubic = spec.cubic;
      opts.reset_known = spec.reset_known;
      opts.on_iteration = recorder(label, 0.0, clean);
      inpaint(c.image, c.mask, schedule, opts);
    }
  } else {
    std::unique_ptr<Operator1D> op;
    if (spec.op == "identity") op = std::make_unique<IdentityOperator>();
    else if (spec.op == "cubic") op = std::make_unique<CubicFillOperator>(spec.cubic);
    else op = std::make_unique<MovingAverageOperator>(parse_count("operator", std::string_view(spec.op).substr(15)));
    const std::size_t iters = spec.iteration_count();
    for (const auto& ref : spec.images) {
      const Image clean = resolve_image(ref);
      const std::string label = image_label(ref);
      const std::uint64_t corrupt_seed = master(), run_seed = master();
      Corrupted c{clean, PixelMask::all_present(clean)};
      if (spec.sigma && *spec.sigma > 0) c = corrupt(clean, CorruptionSpec::gaussian(*spec.sigma, corrupt_seed));
      else if (spec.erase_fraction && *spec.erase_fraction > 0) c = corrupt(clean, CorruptionSpec::erasure(*spec.erase_fraction, corrupt_seed));
      sink.save(label, "input", c.image);
      Rng seeds(run_seed);
      std::vector<PipelineConfig> cfgs(iters);
      for (std::size_t i = 0; i < iters; ++i) {
        PipelineConfig& cfg = cfgs[i];
        for (const IterationOverride* o :
             {&spec.all_iterations, spec.per_iteration.count(i + 1) ? &spec.per_iteration.at(i + 1) : nullptr}) {
          if (!o) continue;
          if (o->K) cfg.K = *o->K;
          if (o->patch_side) cfg.patch_side = *o->patch_side;
          if (o->window) cfg.solver.window_side = *o->window;
          if (o->epsilon) cfg.solver.epsilon = *o->epsilon;
        }
        cfg.op = op.get();
        cfg.rng_seed = seeds();
        cfg.threads = spec.threads;
      }
      restore_iterated(c.image, c.mask, cfgs, nullptr, nullptr, recorder(label, spec.sigma.value_or(0.0), clean));
    }
  }
  if (!sink.dir.empty()) save_report(sink.dir / (sink.prefix + "report.csv"), report);
  return report;
}

std::uint64_t file_checksum(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::uint64_t h = 14695981039346656037ull;
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
  }
  return h;
}

std::vector<AssetEntry> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw AssetError("cannot open manifest " + path.string());
  std::vector<AssetEntry> out;
  std::string line;
  while (std::getline(in, line)) {
    const std::string_view body = trim(std::string_view(line).substr(0, line.find('#')));
    if (body.empty()) continue;
    std::istringstream ls{std::string(body)};
    AssetEntry e;
    std::string sum;
    if (!(ls >> e.file >> e.height >> e.width)) throw AssetError("bad manifest line: " + std::string(body));
    if (ls >> sum) {
      std::uint64_t v = 0;
      const auto [end, ec] = std::from_chars(sum.data(), sum.data() + sum.size(), v, 16);
      if (ec != std::errc() || end != sum.data() + sum.size()) throw AssetError("bad checksum in manifest: " + sum);
      e.checksum = v;
    }
    out.push_back(std::move(e));
  }
  return out;
}

Image load_verified_asset(const std::filesystem::path& dir, const AssetEntry& entry) {
  const auto path = dir / entry.file;
  if (!std::filesystem::exists(path)) throw AssetError("missing asset " + path.string());
  if (entry.checksum && file_checksum(path) != *entry.checksum) throw AssetError("checksum mismatch for " + path.string());
  Image img;
  try {
    img = load_image(path);
  } catch (const std::exception& e) {
    throw AssetError(e.what());
  }
  if (img.height() != entry.height || img.width() != entry.width) {
    throw AssetError(path.string() + " is " + std::to_string(img.height()) + "x" + std::to_string(img.width()) +
                     ", expected " + std::to_string(entry.height) + "x" + std::to_string(entry.width));
  }
  return img;
}

}  // namespace pord
