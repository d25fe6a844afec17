#include "latwalk/model_io.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "latwalk/error.hpp"

namespace latwalk {

namespace {

using nlohmann::json;

double parse_probability(const json& v) {
  if (v.is_number()) return v.get<double>();
  if (!v.is_string()) fail(ErrorCode::ParseError, "probability must be a number or a string");
  const std::string s = v.get<std::string>();
  try {
    const auto slash = s.find('/');
    std::size_t used = 0;
    if (slash == std::string::npos) {
      const double p = std::stod(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return p;
    }
    const std::string num = s.substr(0, slash), den = s.substr(slash + 1);
    const double n = std::stod(num, &used);
    if (used != num.size()) throw std::invalid_argument(s);
    const double d = std::stod(den, &used);
    if (used != den.size() || d == 0.0) throw std::invalid_argument(s);
    return n / d;
  } catch (const std::logic_error&) {
    fail(ErrorCode::ParseError, "cannot parse probability '" + s + "'");
  }
}

std::complex<double> parse_complex(const json& v) {
  if (!v.is_array() || v.size() != 2) fail(ErrorCode::ParseError, "basis vectors are [re, im] pairs");
  return {v[0].get<double>(), v[1].get<double>()};
}

}  // namespace

WalkModel parse_model(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    // nlohmann reports a byte offset; translate it to line/column.
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::ostringstream os;
    os << "line " << line << ", column " << col << ": " << e.what();
    fail(ErrorCode::ParseError, os.str());
  }
  if (!doc.is_object()) fail(ErrorCode::ParseError, "model description must be a JSON object");

  try {
    const std::string kind = doc.value("kind", std::string("custom"));
    const double delta = doc.value("delta", kind == "heavy" ? 0.5 : 1.0);
    LatticeBasis basis;
    if (doc.contains("basis")) {
      const auto& b = doc.at("basis");
      if (!b.is_array() || b.size() != 2) fail(ErrorCode::ParseError, "basis must hold two vectors");
      basis = LatticeBasis(parse_complex(b[0]), parse_complex(b[1]));
    }

    std::optional<WalkModel> model;
    if (kind == "srw") {
      model = presets::srw();
    } else if (kind == "range2") {
      model = presets::range2();
    } else if (kind == "skewed") {
      model = presets::skewed();
    } else if (kind == "heavy") {
      const double beta = doc.value("beta", 7.5);
      const auto rmax = doc.value("rmax", 10000);
      model = presets::heavy_tail(beta, rmax, delta);
    } else if (kind == "custom") {
      if (!doc.contains("support") || !doc.at("support").is_array())
        fail(ErrorCode::ParseError, "custom model needs a \"support\" array");
      std::vector<Step> steps;
      for (const auto& row : doc.at("support")) {
        if (!row.is_array() || row.size() != 3)
          fail(ErrorCode::ParseError, "support rows are [dx, dy, prob]");
        steps.push_back({{row[0].get<std::int32_t>(), row[1].get<std::int32_t>()}, parse_probability(row[2])});
      }
      model.emplace(basis, StepDistribution(std::move(steps), delta), doc.value("name", std::string("custom")));
    } else {
      fail(ErrorCode::ParseError, "unknown model kind '" + kind + "'");
    }
    if (kind != "custom" && doc.contains("basis")) {
      model.emplace(basis, model->distribution(), model->name());
    }
    if (doc.value("normalize", false)) return normalize(*model).model;
    return std::move(*model);
  } catch (const json::exception& e) {
    fail(ErrorCode::ParseError, e.what());
  }
}

WalkModel load_model(const std::string& path) { return parse_model(read_file(path)); }

std::string model_to_json(const WalkModel& model) {
  json doc;
  doc["kind"] = "custom";
  doc["name"] = model.name();
  doc["delta"] = model.distribution().moment_delta();
  doc["basis"] = {{model.basis().e1().real(), model.basis().e1().imag()},
                  {model.basis().e2().real(), model.basis().e2().imag()}};
  json support = json::array();
  for (const auto& s : model.steps()) {
    std::ostringstream p;
    p.precision(17);
    p << s.prob;
    support.push_back({s.offset.j, s.offset.k, p.str()});
  }
  doc["support"] = std::move(support);
  return doc.dump(2);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoError, "cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace latwalk
