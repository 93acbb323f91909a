#include "dstat/io.hpp"

#include <fstream>
#include <sstream>

namespace dstat {

json expr_to_json(const Expr& e) {
  const Node& n = *e;
  json j;
  j["op"] = op_name(n.op);
  switch (n.op) {
    case Op::Const:
      j["value"] = n.value;
      return j;
    case Op::Param:
      j["ref"] = n.ref;
      return j;
    case Op::Input:
      j["ref"] = json::array({n.layer, n.ref});
      return j;
    case Op::Scale:
      j["value"] = n.value;
      break;
    case Op::Affine: {
      json w = json::array();
      for (double c : n.coeffs) w.push_back(c);
      w.push_back(n.value);
      j["value"] = w;
      break;
    }
    case Op::Leaky:
      j["alpha"] = n.alpha;
      break;
    default:
      break;
  }
  if (n.op == Op::Inner) {
    std::size_t k = n.args.size() / 2;
    json a = json::array(), b = json::array();
    for (std::size_t i = 0; i < k; ++i) {
      a.push_back(expr_to_json(n.args[i]));
      b.push_back(expr_to_json(n.args[k + i]));
    }
    j["args"] = json::array({a, b});
    return j;
  }
  json args = json::array();
  for (const auto& a : n.args) args.push_back(expr_to_json(a));
  j["args"] = args;
  return j;
}

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) { throw FormatError(path + ": " + msg); }

const json& field(const json& j, const char* key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) fail(path, std::string("missing '") + key + "'");
  return j.at(key);
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

int integer(const json& j, const std::string& path) {
  if (!j.is_number_integer()) fail(path, "expected an integer");
  return j.get<int>();
}

std::vector<Expr> expr_list(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array");
  std::vector<Expr> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(expr_from_json(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<double> number_list(const json& j, const std::string& path) {
  if (!j.is_array()) fail(path, "expected an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

}  // namespace

Expr expr_from_json(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an expression object");
  const json& opj = field(j, "op", path);
  if (!opj.is_string()) fail(path + ".op", "expected a string");
  Op op;
  try {
    op = op_from_name(opj.get<std::string>());
  } catch (const ExprError& e) {
    fail(path + ".op", e.what());
  }
  auto args = [&]() { return expr_list(field(j, "args", path), path + ".args"); };
  auto arity = [&](std::size_t k) {
    auto a = args();
    if (a.size() != k) fail(path + ".args", "expected " + std::to_string(k) + " arguments");
    return a;
  };
  try {
    switch (op) {
      case Op::Const:
        return ex::constant(number(field(j, "value", path), path + ".value"));
      case Op::Param:
        return ex::param(integer(field(j, "ref", path), path + ".ref"));
      case Op::Input: {
        const json& r = field(j, "ref", path);
        if (!r.is_array() || r.size() != 2) fail(path + ".ref", "expected [layer, component]");
        return ex::input(integer(r[0], path + ".ref[0]"), integer(r[1], path + ".ref[1]"));
      }
      case Op::Sum:
        return ex::sum(args());
      case Op::Diff: {
        auto a = arity(2);
        return ex::diff(a[0], a[1]);
      }
      case Op::Scale: {
        auto a = arity(1);
        return ex::scale(number(field(j, "value", path), path + ".value"), a[0]);
      }
      case Op::Prod: {
        auto a = arity(2);
        return ex::prod(a[0], a[1]);
      }
      case Op::Inner: {
        const json& a = field(j, "args", path);
        if (!a.is_array() || a.size() != 2) fail(path + ".args", "expected [[...],[...]]");
        return ex::inner(expr_list(a[0], path + ".args[0]"), expr_list(a[1], path + ".args[1]"));
      }
      case Op::SqNorm:
        return ex::sqnorm(args());
      case Op::Affine: {
        auto a = args();
        auto w = number_list(field(j, "value", path), path + ".value");
        if (w.size() != a.size() + 1) fail(path + ".value", "expected one weight per argument plus a bias");
        double bias = w.back();
        w.pop_back();
        return ex::affine(std::move(w), bias, std::move(a));
      }
      case Op::Max: {
        auto a = arity(2);
        return ex::max(a[0], a[1]);
      }
      case Op::Abs:
        return ex::abs(arity(1)[0]);
      case Op::Plus:
        return ex::plus(arity(1)[0]);
      case Op::Square:
        return ex::square(arity(1)[0]);
      case Op::Leaky: {
        auto a = arity(1);
        return ex::leaky(a[0], number(field(j, "alpha", path), path + ".alpha"));
      }
    }
  } catch (const ExprError& e) {
    fail(path, e.what());
  }
  fail(path, "unsupported op");
}

json problem_to_json(const CompositeProblem& p) {
  json j;
  j["dims"] = {{"n", p.n}, {"N", p.dims}};
  j["lambda"] = p.lambda;
  json layers = json::array();
  for (const auto& layer : p.layers) {
    json comps = json::array();
    for (const auto& e : layer) comps.push_back(expr_to_json(e));
    layers.push_back(comps);
  }
  j["layers"] = layers;
  j["outer"] = expr_to_json(p.outer);
  if (p.beta) j["beta"] = *p.beta;
  if (p.structure) {
    const Structure& s = *p.structure;
    j["structure"] = {{"kind", s.kind}, {"N", s.N},   {"T", s.T},          {"n0", s.n0},
                      {"n1", s.n1},     {"n2", s.n2}, {"alpha", s.alpha}};
  }
  return j;
}

CompositeProblem problem_from_json(const json& j) {
  if (!j.is_object()) fail("$", "expected a problem object");
  CompositeProblem p;
  const json& dims = field(j, "dims", "$");
  p.n = integer(field(dims, "n", "$.dims"), "$.dims.n");
  const json& N = field(dims, "N", "$.dims");
  if (!N.is_array()) fail("$.dims.N", "expected an array");
  for (std::size_t i = 0; i < N.size(); ++i) p.dims.push_back(integer(N[i], "$.dims.N[" + std::to_string(i) + "]"));
  p.lambda = number(field(j, "lambda", "$"), "$.lambda");
  const json& layers = field(j, "layers", "$");
  if (!layers.is_array()) fail("$.layers", "expected an array");
  for (std::size_t l = 0; l < layers.size(); ++l)
    p.layers.push_back(expr_list(layers[l], "$.layers[" + std::to_string(l) + "]"));
  p.outer = expr_from_json(field(j, "outer", "$"), "$.outer");
  if (j.contains("beta")) p.beta = number_list(j["beta"], "$.beta");
  if (j.contains("structure")) {
    const json& s = j["structure"];
    Structure st;
    st.kind = field(s, "kind", "$.structure").get<std::string>();
    st.N = integer(field(s, "N", "$.structure"), "$.structure.N");
    st.T = integer(field(s, "T", "$.structure"), "$.structure.T");
    st.n0 = integer(field(s, "n0", "$.structure"), "$.structure.n0");
    st.n1 = integer(field(s, "n1", "$.structure"), "$.structure.n1");
    st.n2 = integer(field(s, "n2", "$.structure"), "$.structure.n2");
    st.alpha = number(field(s, "alpha", "$.structure"), "$.structure.alpha");
    p.structure = st;
  }
  p.validate();
  return p;
}

json blocks_to_json(const Blocks& z) {
  json j;
  j["theta"] = z.theta;
  j["u"] = z.u;
  return j;
}

Blocks blocks_from_json(const json& j, const std::string& path) {
  Blocks z;
  z.theta = number_list(field(j, "theta", path), path + ".theta");
  const json& u = field(j, "u", path);
  if (!u.is_array()) fail(path + ".u", "expected an array of blocks");
  for (std::size_t l = 0; l < u.size(); ++l) z.u.push_back(number_list(u[l], path + ".u[" + std::to_string(l) + "]"));
  return z;
}

std::string serialize_problem(const CompositeProblem& p) { return problem_to_json(p).dump(1) + "\n"; }

CompositeProblem parse_problem(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("malformed JSON: ") + e.what());
  }
  return problem_from_json(j);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json_file(const std::string& path) {
  try {
    return json::parse(read_text_file(path));
  } catch (const json::parse_error& e) {
    throw FormatError(path + ": malformed JSON: " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  out << text;
}

}  // namespace dstat
