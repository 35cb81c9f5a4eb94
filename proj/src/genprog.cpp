#include "dotvm/genprog.hpp"

#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <vector>

namespace dotvm {

namespace {

struct VarInfo {
  bool f32 = false;
  double bound = 0; // magnitude estimate for FD conditioning
};

struct Gen {
  std::mt19937_64 rng;
  int budget;
  GenResult out;
  std::ostringstream src;
  std::map<std::string, VarInfo> vars; // initialized scalars
  std::vector<std::string> f64_vars;
  std::vector<std::string> f32_vars;
  std::string array_name; // empty if none
  int array_len = 0;
  bool array_ready = false; // filled by an init loop
  int indent = 0;
  int loop_depth = 0;
  // active loop counters with their exclusive upper bounds
  std::vector<std::pair<std::string, int>> loop_counters;

  Gen(uint64_t seed, int budget) : rng(seed), budget(budget) {}

  uint64_t pick(uint64_t n) { return rng() % n; }
  bool chance(int percent) { return static_cast<int>(pick(100)) < percent; }

  void feature(const char* f) { out.features.insert(f); }

  void line(const std::string& text) {
    for (int i = 0; i < indent; ++i)
      src << "  ";
    src << text << "\n";
  }

  std::string lit(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    std::string s = os.str();
    if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
        s.find("inf") == std::string::npos)
      s += ".0";
    return s;
  }

  double rand_range(double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    return d(rng);
  }

  struct Ex {
    std::string text;
    double bound;
  };

  // a counter that stays within the array bounds, if any is in scope
  std::optional<std::string> index_counter() const {
    for (auto it = loop_counters.rbegin(); it != loop_counters.rend(); ++it)
      if (it->second <= array_len)
        return it->first;
    return std::nullopt;
  }

  Ex squash(const Ex& e) {
    feature("abs");
    return {"(" + e.text + ")/(abs(" + e.text + ")*0.25+1.0)", 4.0};
  }

  Ex capped(Ex e, double limit = 1000.0) {
    if (e.bound > limit)
      return squash(e);
    return e;
  }

  Ex leaf64() {
    switch (pick(4)) {
    case 0: {
      const double v = std::round(rand_range(-4, 4) * 8) / 8; // dyadic literals
      return {lit(v), std::fabs(v)};
    }
    case 1: {
      const int slot = static_cast<int>(pick(out.n_inputs));
      return {"input(" + std::to_string(slot) + ")", 2.0};
    }
    case 2:
      if (!f64_vars.empty()) {
        const std::string& v = f64_vars[pick(f64_vars.size())];
        return {v, vars[v].bound};
      }
      return {"input(0)", 2.0};
    default:
      if (array_ready && index_counter() && chance(60)) {
        feature("array");
        return {array_name + "[" + *index_counter() + "]", 16.0};
      }
      if (array_ready) {
        feature("array");
        return {array_name + "[" + std::to_string(pick(array_len)) + ".0]", 16.0};
      }
      return {lit(std::round(rand_range(-2, 2) * 4) / 4), 2.0};
    }
  }

  Ex math64(int depth) {
    static const char* unary[] = {"sin", "cos", "tan", "asin", "acos", "atan",
                                  "sinh", "cosh", "tanh", "exp", "log", "log10",
                                  "sqrt", "fabs", "floor", "ceil"};
    feature("math");
    const Ex a = expr64(depth - 1);
    switch (pick(10)) {
    case 0: { // binary: pow with a small integral exponent
      const int k = static_cast<int>(pick(5)) - 2;
      const Ex base = squash(a);
      return {"pow(abs(" + base.text + ")+0.5," + lit(k) + ")", 95.0};
    }
    case 1: { // binary: atan2, second argument kept positive
      const Ex b = expr64(depth - 1);
      return {"atan2(" + a.text + ",abs(" + capped(b).text + ")+0.5)", 3.2};
    }
    case 2: { // binary: fmod, divisor away from zero
      if (loop_depth > 0)
        break; // keep loop bodies smooth
      out.fd_safe = false;
      feature("fmod");
      const Ex b = expr64(depth - 1);
      return {"fmod(" + capped(a).text + ",abs(" + capped(b, 16).text + ")+1.5)", 18.0};
    }
    case 3: { // binary: ldexp with a small constant exponent
      const int k = static_cast<int>(pick(7)) - 3;
      return {"ldexp(" + capped(a).text + "," + std::to_string(k) + ")",
              std::ldexp(1000.0, k)};
    }
    default:
      break;
    }
    const char* f = unary[pick(std::size(unary))];
    std::string fs(f);
    if (fs == "floor" || fs == "ceil") {
      if (loop_depth > 0)
        fs = "atan"; // keep loop bodies smooth
      else {
        out.fd_safe = false;
        feature(fs.c_str());
        return {fs + "(" + capped(a, 100).text + ")", 101.0};
      }
    }
    if (fs == "log" || fs == "log10")
      return {fs + "(abs(" + capped(a).text + ")+0.5)", 7.0};
    if (fs == "sqrt")
      return {"sqrt(abs(" + capped(a).text + "))", 32.0};
    if (fs == "asin" || fs == "acos")
      return {fs + "((" + squash(a).text + ")*0.2)", 3.2};
    if (fs == "tan")
      return {"tan((" + squash(a).text + ")*0.3)", 2.6};
    if (fs == "exp" || fs == "sinh" || fs == "cosh")
      return {fs + "(" + squash(a).text + ")", 55.0};
    if (fs == "fabs")
      return {"fabs(" + a.text + ")", a.bound};
    return {fs + "(" + a.text + ")", 1.6}; // sin/cos/atan/tanh
  }

  Ex expr64(int depth) {
    if (depth <= 0)
      return leaf64();
    switch (pick(12)) {
    case 0:
    case 1: {
      const Ex a = expr64(depth - 1);
      const Ex b = expr64(depth - 1);
      feature("f64arith");
      return capped({"(" + a.text + (pick(2) ? "+" : "-") + b.text + ")",
                     a.bound + b.bound});
    }
    case 2:
    case 3: {
      const Ex a = expr64(depth - 1);
      const Ex b = expr64(depth - 1);
      feature("f64arith");
      return capped({"(" + a.text + "*" + b.text + ")", a.bound * b.bound});
    }
    case 4: {
      const Ex a = expr64(depth - 1);
      const Ex b = expr64(depth - 1);
      feature("f64arith");
      return capped({"(" + a.text + "/(abs(" + b.text + ")+0.5))", a.bound * 2});
    }
    case 5: {
      feature("neg");
      const Ex a = expr64(depth - 1);
      return {"(-" + a.text + ")", a.bound};
    }
    case 6: {
      feature("abs");
      const Ex a = expr64(depth - 1);
      return {"abs(" + a.text + ")", a.bound};
    }
    case 7: {
      feature("negabs");
      const Ex a = expr64(depth - 1);
      return {"negabs(" + a.text + ")", a.bound};
    }
    case 8: {
      feature("select");
      const Ex c1 = expr64(depth - 1);
      const Ex c2 = expr64(depth - 1);
      const Ex a = expr64(depth - 1);
      const Ex b = expr64(depth - 1);
      static const char* rel[] = {"<", "<=", ">", ">=", "==", "!="};
      return {"select(" + c1.text + rel[pick(6)] + c2.text + "," + a.text + "," +
                  b.text + ")",
              std::max(a.bound, b.bound)};
    }
    case 9:
      return math64(depth);
    case 10:
      if (!f32_vars.empty()) {
        feature("cast");
        const std::string& w = f32_vars[pick(f32_vars.size())];
        return {"f64(" + w + ")", vars[w].bound};
      }
      if (chance(30)) {
        feature("bits");
        const Ex a = expr64(depth - 1);
        switch (pick(3)) {
        case 0: return {"bits_and64(" + a.text + ",0x7FFFFFFFFFFFFFFF)", a.bound};
        case 1: return {"bits_or64(" + a.text + ",0x8000000000000000)", a.bound};
        default: return {"bits_xor64(" + a.text + ",0x8000000000000000)", a.bound};
        }
      }
      return leaf64();
    default:
      if (loop_depth == 0 && chance(25)) {
        out.fd_safe = false;
        feature("round");
        const Ex a = expr64(depth - 1);
        return {"round(" + capped(a, 100).text + ")", 101.0};
      }
      return leaf64();
    }
  }

  Ex expr32(int depth) {
    if (depth <= 0 || f32_vars.empty()) {
      if (!f32_vars.empty() && chance(60)) {
        const std::string& w = f32_vars[pick(f32_vars.size())];
        return {w, vars[w].bound};
      }
      feature("cast");
      const Ex a = expr64(0);
      return {"f32(" + a.text + ")", a.bound};
    }
    switch (pick(8)) {
    case 0:
    case 1: {
      const Ex a = expr32(depth - 1);
      const Ex b = expr32(depth - 1);
      feature("f32");
      return {"(" + a.text + (pick(2) ? "+" : "-") + b.text + ")", a.bound + b.bound};
    }
    case 2: {
      const Ex a = expr32(depth - 1);
      const Ex b = expr32(depth - 1);
      feature("f32");
      if (a.bound * b.bound > 1000) {
        feature("cast");
        return {"f32((f64(" + a.text + ")*f64(" + b.text + "))/(abs(f64(" + a.text +
                    ")*f64(" + b.text + "))*0.25+1.0))",
                4.0};
      }
      return {"(" + a.text + "*" + b.text + ")", a.bound * b.bound};
    }
    case 3: {
      const Ex a = expr32(depth - 1);
      const Ex b = expr32(depth - 1);
      feature("f32");
      return {"(" + a.text + "/(abs(" + b.text + ")+f32(0.5)))", a.bound * 2};
    }
    case 4: {
      feature("abs");
      const Ex a = expr32(depth - 1);
      return {"abs(" + a.text + ")", a.bound};
    }
    case 5: {
      feature("neg");
      const Ex a = expr32(depth - 1);
      return {"(-" + a.text + ")", a.bound};
    }
    case 6:
      if (chance(40)) {
        feature("bits");
        const Ex a = expr32(depth - 1);
        switch (pick(3)) {
        case 0: return {"bits_and32(" + a.text + ",0x7FFFFFFF)", a.bound};
        case 1: return {"bits_or32(" + a.text + ",0x80000000)", a.bound};
        default: return {"bits_xor32(" + a.text + ",0x80000000)", a.bound};
        }
      }
      [[fallthrough]];
    default: {
      feature("cast");
      const Ex a = expr64(depth - 1);
      return {"f32(" + capped(a).text + ")", std::min(a.bound, 1000.0)};
    }
  }
  }

  void assign64(int depth) {
    const std::string& v = f64_vars[pick(f64_vars.size())];
    Ex e = capped(expr64(depth));
    if (loop_depth > 0) {
      // contractive update so loops cannot blow values up
      line(v + " = " + v + "*0.5 + " + e.text + ";");
      vars[v].bound = vars[v].bound * 0.5 + e.bound;
      if (vars[v].bound > 2000)
        vars[v].bound = 2000;
    } else {
      line(v + " = " + e.text + ";");
      vars[v].bound = e.bound;
    }
  }

  void assign32(int depth) {
    if (f32_vars.empty())
      return assign64(depth);
    const std::string& w = f32_vars[pick(f32_vars.size())];
    Ex e = expr32(depth);
    feature("f32");
    line(w + " = " + e.text + ";");
    vars[w].bound = e.bound;
  }

  void array_store(int depth) {
    if (!array_ready)
      return assign64(depth);
    feature("array");
    const auto counter = index_counter();
    const std::string idx = counter && chance(70)
                                ? *counter
                                : std::to_string(pick(array_len)) + ".0";
    Ex e = capped(expr64(depth), 16.0);
    line(array_name + "[" + idx + "] = " + e.text + ";");
  }

  void if_stmt(int depth, int& stmts_left) {
    feature("if");
    const Ex a = expr64(depth - 1);
    const Ex b = expr64(depth - 1);
    static const char* rel[] = {"<", "<=", ">", ">="};
    line("if (" + a.text + rel[pick(4)] + b.text + ") {");
    indent++;
    simple_stmt(depth);
    stmts_left--;
    indent--;
    if (chance(60)) {
      line("} else {");
      indent++;
      simple_stmt(depth);
      stmts_left--;
      indent--;
    }
    line("}");
  }

  void for_loop(int depth, int& stmts_left) {
    feature("loop");
    const std::string counter = "i" + std::to_string(loop_counters.size());
    const int iters = 2 + static_cast<int>(pick(5));
    line("for (" + counter + " = 0.0; " + counter + " < " + std::to_string(iters) +
         ".0; " + counter + " = " + counter + " + 1.0) {");
    indent++;
    loop_depth++;
    loop_counters.emplace_back(counter, iters);
    const int body = 1 + static_cast<int>(pick(2));
    for (int i = 0; i < body && stmts_left > 0; ++i, --stmts_left)
      simple_stmt(depth);
    loop_counters.pop_back();
    loop_depth--;
    indent--;
    line("}");
  }

  void while_loop(int depth, int& stmts_left) {
    feature("loop");
    const std::string counter = "i" + std::to_string(loop_counters.size());
    const int iters = 2 + static_cast<int>(pick(4));
    line(counter + " = 0.0;");
    line("while (" + counter + " < " + std::to_string(iters) + ".0) {");
    indent++;
    loop_depth++;
    loop_counters.emplace_back(counter, iters);
    const int body = 1 + static_cast<int>(pick(2));
    for (int i = 0; i < body && stmts_left > 0; ++i, --stmts_left)
      simple_stmt(depth);
    line(counter + " = " + counter + " + 1.0;");
    loop_counters.pop_back();
    loop_depth--;
    indent--;
    line("}");
  }

  void simple_stmt(int depth) {
    switch (pick(6)) {
    case 0:
    case 1:
    case 2:
      assign64(depth);
      break;
    case 3:
      assign32(depth);
      break;
    default:
      array_store(depth);
      break;
    }
  }

  GenResult run() {
    out.n_inputs = 1 + static_cast<int>(pick(3));
    out.seed_input = static_cast<int>(pick(out.n_inputs));

    const int n64 = 2 + static_cast<int>(pick(3));
    for (int i = 0; i < n64; ++i)
      f64_vars.push_back("v" + std::to_string(i));
    const int n32 = chance(40) ? 1 + static_cast<int>(pick(2)) : 0;
    for (int i = 0; i < n32; ++i)
      f32_vars.push_back("w" + std::to_string(i));
    // binary32 rounding is a staircase at the finite-difference step size, so
    // programs touching f32 leave the smooth subset.
    if (n32 > 0)
      out.fd_safe = false;
    const bool with_array = chance(55);
    if (with_array) {
      array_name = "a0";
      array_len = 4 + static_cast<int>(pick(5));
    }

    for (const auto& v : f64_vars) {
      line("var " + v + ": f64;");
      vars[v] = {false, 2.0};
    }
    for (const auto& w : f32_vars) {
      line("var " + w + ": f32;");
      vars[w] = {true, 2.0};
    }
    for (int i = 0; i < 3; ++i)
      line("var i" + std::to_string(i) + ": f64;");
    if (with_array)
      line("arr " + array_name + "[" + std::to_string(array_len) + "]: f64;");
    line("");

    // Every variable starts from the inputs so dots can flow anywhere.
    for (size_t i = 0; i < f64_vars.size(); ++i) {
      const int slot = static_cast<int>(pick(out.n_inputs));
      std::string extra =
          chance(50) ? "" : (std::string(pick(2) ? "+" : "*") + lit(rand_range(-2, 2)));
      line(f64_vars[i] + " = input(" + std::to_string(slot) + ")" + extra + ";");
      vars[f64_vars[i]].bound = 6.0;
    }
    for (const auto& w : f32_vars) {
      feature("cast");
      line(w + " = f32(input(" + std::to_string(pick(out.n_inputs)) + "));");
    }
    if (with_array) {
      feature("loop");
      feature("array");
      array_ready = true;
      const std::string v0 = f64_vars[0];
      line("for (i2 = 0.0; i2 < " + std::to_string(array_len) + ".0; i2 = i2 + 1.0) {");
      line("  a0[i2] = " + v0 + " + i2*0.25;");
      line("}");
    }

    int stmts_left = std::max(3, budget);
    while (stmts_left > 0) {
      const int depth = 2 + static_cast<int>(pick(2));
      switch (pick(10)) {
      case 0:
        if_stmt(depth, stmts_left);
        break;
      case 1:
        for_loop(depth, stmts_left);
        break;
      case 2:
        while_loop(depth, stmts_left);
        break;
      default:
        simple_stmt(depth);
        stmts_left--;
        break;
      }
      stmts_left--;
    }

    out.n_outputs = 1 + static_cast<int>(pick(3));
    for (int i = 0; i < out.n_outputs; ++i) {
      if (i == 0 || chance(70)) {
        line("print(" + capped(expr64(2)).text + ");");
      } else if (!f32_vars.empty()) {
        line("print(f64(" + f32_vars[pick(f32_vars.size())] + "));");
        feature("cast");
      } else {
        line("print(" + f64_vars[pick(f64_vars.size())] + ");");
      }
    }

    out.source = src.str();
    return std::move(out);
  }
};

} // namespace

GenResult gen_random(uint64_t seed, int size_budget) {
  Gen gen(seed, size_budget);
  return gen.run();
}

} // namespace dotvm
