#include "pord/filter_bank.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "pord/image_io.hpp"

namespace pord {

std::vector<double> FilterBank::stacked() const {
  std::vector<double> h(smooth);
  h.insert(h.end(), edge.begin(), edge.end());
  return h;
}

FilterBank FilterBank::from_stacked(std::span<const double> h, double sigma, int iteration) {
  if (h.empty() || h.size() % 2 != 0) throw std::invalid_argument("stacked filter vector must have even length");
  const std::size_t L = h.size() / 2;
  return {sigma, iteration, {h.begin(), h.begin() + static_cast<std::ptrdiff_t>(L)},
          {h.begin() + static_cast<std::ptrdiff_t>(L), h.end()}};
}

FilterBank FilterBank::impulse(std::size_t length, double sigma, int iteration) {
  if (length == 0) throw std::invalid_argument("filter length must be >= 1");
  FilterBank b{sigma, iteration, std::vector<double>(length, 0.0), std::vector<double>(length, 0.0)};
  b.smooth[(length - 1) / 2] = 1.0;
  b.edge[(length - 1) / 2] = 1.0;
  return b;
}

void filter_signal(std::span<const double> in, std::span<const double> taps, std::span<double> out) {
  const std::size_t n = in.size();
  if (out.size() != n) throw DimensionError("filter output length mismatch");
  if (n == 0) return;
  const auto L = static_cast<long long>(taps.size());
  const long long center = (L - 1) / 2;
  const auto len = static_cast<long long>(n);
  for (long long m = 0; m < len; ++m) {
    double acc = 0.0;
    const long long first = m + center;
    if (first - (L - 1) >= 0 && first < len) {
      for (long long t = 0; t < L; ++t) acc += taps[t] * in[static_cast<std::size_t>(first - t)];
    } else {
      for (long long t = 0; t < L; ++t) acc += taps[t] * in[reflect_index(first - t, n)];
    }
    out[static_cast<std::size_t>(m)] = acc;
  }
}

std::vector<double> filter_signal(std::span<const double> in, std::span<const double> taps) {
  std::vector<double> out(in.size());
  filter_signal(in, taps, out);
  return out;
}

void FilterOperator::apply(const SignalContext& ctx, std::span<const double> values, std::span<const std::uint8_t>,
                           std::span<double> out) const {
  filter_signal(values, ctx.segment == 0 ? bank_.smooth : bank_.edge, out);
}

void save_filter_bank(const std::filesystem::path& path, const FilterBank& bank) {
  if (bank.smooth.size() != bank.edge.size()) throw std::invalid_argument("filter bank classes differ in length");
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", bank.sigma);
  out << "sigma " << buf << "\n";
  out << "iteration " << bank.iteration << "\n";
  out << "L " << bank.length() << "\n";
  for (double v : bank.stacked()) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf << "\n";
  }
  if (!out) throw IoError("write failed for " + path.string());
}

FilterBank load_filter_bank(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  FilterBank bank;
  std::size_t L = 0;
  bool have_sigma = false, have_iter = false, have_len = false;
  std::string line;
  std::vector<double> taps;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "sigma") {
      have_sigma = static_cast<bool>(ls >> bank.sigma);
    } else if (key == "iteration") {
      have_iter = static_cast<bool>(ls >> bank.iteration);
    } else if (key == "L") {
      have_len = static_cast<bool>(ls >> L);
    } else {
      std::size_t used = 0;
      double v;
      try {
        v = std::stod(key, &used);
      } catch (const std::exception&) {
        throw FormatError("bad filter tap '" + key + "' in " + path.string());
      }
      if (used != key.size()) throw FormatError("bad filter tap '" + key + "' in " + path.string());
      taps.push_back(v);
    }
  }
  if (!have_sigma || !have_iter || !have_len) throw FormatError("filter bank header incomplete in " + path.string());
  if (L == 0 || taps.size() != 2 * L) {
    throw FormatError("filter bank " + path.string() + " has " + std::to_string(taps.size()) + " taps, expected " +
                      std::to_string(2 * L));
  }
  return FilterBank::from_stacked(taps, bank.sigma, bank.iteration);
}

}  // namespace pord
