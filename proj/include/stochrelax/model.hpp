#ifndef STOCHRELAX_MODEL_HPP
#define STOCHRELAX_MODEL_HPP

#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "errors.hpp"
#include "expr.hpp"
#include "interval.hpp"
#include "stochastics.hpp"

namespace stochrelax {

////////////////////////////////////////////////////////////////////////
//! Parametric ODE with random inputs and a terminal cost:
//!   dx/dt = f(t, p, w, x),  x(t0) = x0(p, w),  cost g(p, w, x(tf))
//! with p in pbox and w distributed according to dist on wbox.
////////////////////////////////////////////////////////////////////////
struct Model {
  int np = 0;
  int nw = 0;
  int nx = 0;
  ExprGraph f;
  ExprGraph x0;
  ExprGraph g;
  double t0 = 0.0;
  double tf = 0.0;
  IntervalBox pbox;
  IntervalBox wbox;
  DistributionSpec dist;

  VariableScope f_scope() const { return {true, np, nw, nx}; }
  VariableScope x0_scope() const { return {false, np, nw, 0}; }
  VariableScope g_scope() const { return {false, np, nw, nx}; }
};

//! Checks dimensions, horizon and support consistency; throws on violation
inline void validate(const Model& m) {
  if (m.np < 0 || m.nw < 1 || m.nx < 1)
    throw Error(ErrorKind::DimensionError, "model needs nw >= 1, nx >= 1 and np >= 0");
  if (!(m.t0 < m.tf)) throw Error(ErrorKind::InvalidArgument, "horizon needs t0 < tf");
  if (m.f.outputs() != static_cast<std::size_t>(m.nx))
    throw Error(ErrorKind::DimensionError, "f must have nx outputs");
  if (m.x0.outputs() != static_cast<std::size_t>(m.nx))
    throw Error(ErrorKind::DimensionError, "x0 must have nx outputs");
  if (m.g.outputs() != 1) throw Error(ErrorKind::DimensionError, "g must have exactly one output");
  if (m.pbox.size() != static_cast<std::size_t>(m.np))
    throw Error(ErrorKind::DimensionError, "pbox must have np components");
  if (m.wbox.size() != static_cast<std::size_t>(m.nw))
    throw Error(ErrorKind::DimensionError, "wbox must have nw components");
  if (m.dist.dim() != static_cast<std::size_t>(m.nw))
    throw Error(ErrorKind::DimensionError, "dist must have nw components");
  const auto check_usage = [](const ExprGraph& e, const VariableScope& s, const char* what) {
    const VariableScope u = e.usage();
    if ((u.time && !s.time) || u.np > s.np || u.nw > s.nw || u.nx > s.nx)
      throw Error(ErrorKind::DimensionError, std::string(what) + " references undeclared variables");
  };
  check_usage(m.f, m.f_scope(), "f");
  check_usage(m.x0, m.x0_scope(), "x0");
  check_usage(m.g, m.g_scope(), "g");
  const IntervalBox support = m.dist.support();
  for (int i = 0; i < m.nw; ++i)
    if (!(support[i] == m.wbox[i]))
      throw Error(ErrorKind::InvalidArgument,
                  "wbox component " + std::to_string(i + 1) + " differs from the distribution support");
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Splits on any of `seps`, dropping empty fields
inline std::vector<std::string_view> split(std::string_view s, std::string_view seps) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || seps.find(s[i]) != std::string_view::npos) {
      if (i > start) out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

class ModelReader {
 public:
  explicit ModelReader(std::string_view text) : text_(text) {}

  Model read() {
    struct Line {
      int number;
      int column;  // 1-based column of the first non-blank character
      std::string_view body;
    };
    std::map<std::string, std::vector<Line>> sections;
    std::string current;
    int number = 0;
    std::size_t pos = 0;
    while (pos <= text_.size()) {
      const std::size_t eol = std::min(text_.find('\n', pos), text_.size());
      std::string_view raw = text_.substr(pos, eol - pos);
      pos = eol + 1;
      ++number;
      if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
      const std::string_view body = trim(raw);
      if (body.empty()) {
        if (eol == text_.size()) break;
        continue;
      }
      const int column = static_cast<int>(body.data() - raw.data()) + 1;
      if (body.front() == '[') {
        if (body.back() != ']') throw ParseError("unterminated section header", number, column);
        current = std::string(trim(body.substr(1, body.size() - 2)));
        static const char* known[] = {"dims", "horizon", "pbox", "wbox", "dist", "f", "x0", "g"};
        if (std::find(std::begin(known), std::end(known), current) == std::end(known))
          throw ParseError("unknown section [" + current + "]", number, column);
        if (sections.count(current)) throw ParseError("duplicate section [" + current + "]", number, column);
        sections[current];
      } else {
        if (current.empty()) throw ParseError("content before the first section", number, column);
        sections[current].push_back({number, column, body});
      }
      if (eol == text_.size()) break;
    }
    for (const char* required : {"dims", "horizon", "pbox", "wbox", "dist", "f", "x0", "g"})
      if (!sections.count(required))
        throw ParseError(std::string("missing section [") + required + "]", number, 1);

    Model m;
    // [dims]
    std::map<std::string, double> dims;
    for (const auto& l : sections["dims"]) read_keyed(l.body, l.number, l.column, dims);
    for (const char* key : {"np", "nw", "nx"})
      if (!dims.count(key)) throw ParseError(std::string("[dims] is missing ") + key, number, 1);
    m.np = as_count(dims["np"], "np");
    m.nw = as_count(dims["nw"], "nw");
    m.nx = as_count(dims["nx"], "nx");

    // [horizon]: either "t0 = a" / "tf = b" lines or a single "a, b" line
    std::map<std::string, double> horizon;
    for (const auto& l : sections["horizon"]) {
      if (l.body.find('=') != std::string_view::npos) {
        read_keyed(l.body, l.number, l.column, horizon);
      } else {
        const auto v = numbers(l.body, l.number, l.column);
        if (v.size() != 2) throw ParseError("expected 't0, tf'", l.number, l.column);
        horizon["t0"] = v[0];
        horizon["tf"] = v[1];
      }
    }
    if (!horizon.count("t0") || !horizon.count("tf"))
      throw ParseError("[horizon] needs t0 and tf", number, 1);
    m.t0 = horizon["t0"];
    m.tf = horizon["tf"];

    m.pbox = read_box(sections["pbox"], m.np, "pbox");
    m.wbox = read_box(sections["wbox"], m.nw, "wbox");

    // [dist]
    std::vector<Marginal> marginals;
    for (const auto& l : sections["dist"]) {
      const auto fields = split(l.body, " \t,");
      const std::string_view family = fields.empty() ? std::string_view{} : fields[0];
      std::vector<double> v;
      for (std::size_t i = 1; i < fields.size(); ++i) v.push_back(number_of(fields[i], l.number, l.column));
      if (family == "uniform" && v.size() == 2) {
        marginals.emplace_back(Uniform{v[0], v[1]});
      } else if (family == "truncnormal" && v.size() == 4) {
        marginals.emplace_back(TruncatedNormal{v[0], v[1], v[2], v[3]});
      } else {
        throw ParseError("expected 'uniform a b' or 'truncnormal mu sigma a b'", l.number, l.column);
      }
    }
    if (static_cast<int>(marginals.size()) != m.nw)
      throw Error(ErrorKind::DimensionError, "[dist] needs one line per uncertainty component");
    m.dist = DistributionSpec(std::move(marginals));

    read_graph(sections["f"], m.f_scope(), m.nx, "f", m.f);
    read_graph(sections["x0"], m.x0_scope(), m.nx, "x0", m.x0);
    read_graph(sections["g"], m.g_scope(), 1, "g", m.g);

    validate(m);
    return m;
  }

 private:
  static double number_of(std::string_view s, int line, int column) {
    s = trim(s);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
      throw ParseError("malformed number '" + std::string(s) + "'", line, column);
    return v;
  }
  static std::vector<double> numbers(std::string_view body, int line, int column) {
    std::vector<double> out;
    for (auto field : split(body, " \t,")) out.push_back(number_of(field, line, column));
    return out;
  }
  static void read_keyed(std::string_view body, int line, int column, std::map<std::string, double>& into) {
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", line, column);
    into[std::string(trim(body.substr(0, eq)))] = number_of(body.substr(eq + 1), line, column);
  }
  static int as_count(double v, const char* what) {
    if (v < 0 || v != std::floor(v) || v > 1000)
      throw Error(ErrorKind::DimensionError, std::string(what) + " must be a small nonnegative integer");
    return static_cast<int>(v);
  }
  template <class Lines>
  static IntervalBox read_box(const Lines& lines, int n, const char* what) {
    IntervalBox box;
    for (const auto& l : lines) {
      const auto v = numbers(l.body, l.number, l.column);
      if (v.size() != 2 || !(v[0] <= v[1]))
        throw ParseError(std::string("[") + what + "] lines need 'lo, hi' with lo <= hi", l.number, l.column);
      box.emplace_back(v[0], v[1]);
    }
    if (static_cast<int>(box.size()) != n)
      throw Error(ErrorKind::DimensionError, std::string("[") + what + "] has the wrong number of components");
    return box;
  }
  template <class Lines>
  static void read_graph(const Lines& lines, const VariableScope& scope, int outputs, const char* what,
                         ExprGraph& graph) {
    for (const auto& l : lines) {
      const auto eq = l.body.find('=');
      if (eq == std::string_view::npos) throw ParseError("expected 'name = expression'", l.number, l.column);
      const std::string name(trim(l.body.substr(0, eq)));
      if (name.empty()) throw ParseError("missing output name", l.number, l.column);
      parse_expression(l.body.substr(eq + 1), scope, graph, name, l.number,
                       l.column + static_cast<int>(eq) + 1);
    }
    if (static_cast<int>(graph.outputs()) != outputs)
      throw Error(ErrorKind::DimensionError, std::string("[") + what + "] needs " + std::to_string(outputs) +
                                                 " output line(s)");
  }

  std::string_view text_;
};

}  // namespace detail

inline Model parse_model(std::string_view text) { return detail::ModelReader(text).read(); }

inline Model load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidArgument, "cannot open model file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

//! Serializes a model in the model-file format; parse_model() reads it back
inline std::string to_text(const Model& m) {
  std::ostringstream os;
  os << "[dims]\nnp = " << m.np << "\nnw = " << m.nw << "\nnx = " << m.nx << "\n";
  os << "[horizon]\nt0 = " << format_number(m.t0) << "\ntf = " << format_number(m.tf) << "\n";
  os << "[pbox]\n";
  for (const auto& iv : m.pbox) os << format_number(iv.lo()) << ", " << format_number(iv.hi()) << "\n";
  os << "[wbox]\n";
  for (const auto& iv : m.wbox) os << format_number(iv.lo()) << ", " << format_number(iv.hi()) << "\n";
  os << "[dist]\n";
  for (const auto& marg : m.dist.marginals()) {
    if (const auto* u = std::get_if<Uniform>(&marg)) {
      os << "uniform " << format_number(u->a) << " " << format_number(u->b) << "\n";
    } else {
      const auto& n = std::get<TruncatedNormal>(marg);
      os << "truncnormal " << format_number(n.mu) << " " << format_number(n.sigma) << " "
         << format_number(n.a) << " " << format_number(n.b) << "\n";
    }
  }
  const auto graph = [&](const char* section, const ExprGraph& e) {
    os << "[" << section << "]\n";
    for (std::size_t r = 0; r < e.outputs(); ++r) os << e.name(r) << " = " << to_string(e, r) << "\n";
  };
  graph("f", m.f);
  graph("x0", m.x0);
  graph("g", m.g);
  return os.str();
}

//! Negative-resistance circuit with truncated-normal initial conditions
inline const char* circuit_model_text() {
  return R"(# Negative resistance circuit: inductor, capacitor and a nonlinear
# resistive element in parallel. x1 is the inductor current, x2 the
# capacitor voltage; p1, p2 are inverse inductance and capacitance.
[dims]
np = 2
nw = 2
nx = 2

[horizon]
t0 = 0
tf = 5

[pbox]
0.1, 0.3
0.1, 0.3

[wbox]
0.7, 1.3
0.7, 1.3

[dist]
truncnormal 1 0.1 0.7 1.3
truncnormal 1 0.1 0.7 1.3

[f]
f1 = p1*x2
f2 = -p2*(x1 - x2 + x2^3/3)

[x0]
x0_1 = w1
x0_2 = w2

[g]
g = x1
)";
}

inline Model circuit_model() { return parse_model(circuit_model_text()); }

}  // namespace stochrelax

#endif  // STOCHRELAX_MODEL_HPP
