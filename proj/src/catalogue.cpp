#include "rvts/catalogue.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

#include "rvts/error.hpp"

namespace rvts::catalogue {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double parse_number(std::string_view s, std::string_view text) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
    throw InvalidParameter("function '" + std::string(text) + "': bad argument '" + std::string(s) + "'");
  return v;
}

int as_index(double v, std::string_view text) {
  if (v != std::floor(v) || std::fabs(v) > 1e6)
    throw InvalidParameter("function '" + std::string(text) + "': index must be an integer");
  return static_cast<int>(v);
}

void expect_args(const TestFunction& f, std::size_t n) {
  if (f.args.size() != n)
    throw InvalidParameter("function '" + f.text + "' takes " + std::to_string(n) + " argument(s)");
}

}  // namespace

TestFunction parse_function(std::string_view text, const starspace::SpaceHandle& space, double alpha) {
  TestFunction f;
  text = trim(text);
  f.text = std::string(text);
  const auto open = text.find('(');
  if (open == std::string_view::npos || text.back() != ')')
    throw InvalidParameter("function '" + f.text + "': expected name(args)");
  f.name = std::string(trim(text.substr(0, open)));
  std::string_view inner = text.substr(open + 1, text.size() - open - 2);
  if (!trim(inner).empty()) {
    std::size_t pos = 0;
    while (true) {
      const auto comma = inner.find(',', pos);
      f.args.push_back(parse_number(inner.substr(pos, comma - pos), text));
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
  }

  const starspace::Space* sp = space.get();
  if (f.name == "indicator_exceed") {
    expect_args(f, 2);
    const int j = as_index(f.args[0], text);
    const double c = f.args[1];
    if (!(c > 0.0)) throw InvalidParameter("indicator_exceed: level must be > 0");
    f.index = j;
    f.support_radius = c;
    f.window = [sp, j, c](const starspace::SeriesWindow& w) {
      return starspace::entry_modulus(*sp, w, j) > c ? 1.0 : 0.0;
    };
    f.point = [sp, c](starspace::Coords x, bool zero) { return !zero && sp->modulus(x) > c ? 1.0 : 0.0; };
  } else if (f.name == "indicator_nonzero") {
    expect_args(f, 1);
    const int j = as_index(f.args[0], text);
    f.index = j;
    f.window = [sp, j](const starspace::SeriesWindow& w) {
      return !w.is_zero(j) && !sp->is_origin(w.at(j)) ? 1.0 : 0.0;
    };
    f.point = [sp](starspace::Coords x, bool zero) { return !zero && !sp->is_origin(x) ? 1.0 : 0.0; };
  } else if (f.name == "product_exceed") {
    if (f.args.empty()) throw InvalidParameter("product_exceed: needs at least one level");
    for (double c : f.args)
      if (!(c > 0.0)) throw InvalidParameter("product_exceed: levels must be > 0");
    const std::vector<double> levels = f.args;
    f.support_radius = *std::max_element(levels.begin(), levels.end());
    f.window = [sp, levels](const starspace::SeriesWindow& w) {
      if (levels.size() > w.length()) throw ShapeMismatch("product_exceed: more levels than window entries");
      for (std::size_t i = 0; i < levels.size(); ++i)
        if (!(starspace::entry_modulus(*sp, w, w.first() + static_cast<int>(i)) > levels[i])) return 0.0;
      return 1.0;
    };
    const double c0 = levels.front();
    f.point = [sp, c0](starspace::Coords x, bool zero) { return !zero && sp->modulus(x) > c0 ? 1.0 : 0.0; };
  } else if (f.name == "min_alpha_power") {
    expect_args(f, 1);
    const int j = as_index(f.args[0], text);
    f.index = j;
    f.window = [sp, j, alpha](const starspace::SeriesWindow& w) {
      return std::pow(std::min(starspace::entry_modulus(*sp, w, j), 1.0), alpha);
    };
    f.point = [sp, alpha](starspace::Coords x, bool zero) {
      return zero ? 0.0 : std::pow(std::min(sp->modulus(x), 1.0), alpha);
    };
  } else {
    throw InvalidParameter("unknown function '" + f.name + "'");
  }
  return f;
}

}  // namespace rvts::catalogue
