#include "ergolab/modelio.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ergolab {

namespace {

using nlohmann::json;

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::kInvalidModel, what); }

double probability(const json& j, const std::string& where) {
  if (j.is_number()) return j.get<double>();
  if (!j.is_string()) invalid(where + ": expected a decimal string");
  const auto s = j.get<std::string>();
  double x = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc{} || end != s.data() + s.size()) invalid(where + ": bad decimal '" + s + "'");
  return x;
}

std::vector<double> probabilities(const json& j, const std::string& where) {
  if (!j.is_array()) invalid(where + ": expected an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(probability(j[i], where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

std::vector<Symbol> symbols(const json& j, const std::string& where) {
  if (!j.is_array()) invalid(where + ": expected an array of symbols");
  std::vector<Symbol> out;
  for (const auto& x : j) {
    if (!x.is_number_unsigned() || x.get<std::uint64_t>() >= kMaxAlphabet) {
      invalid(where + ": symbols must be integers in [0, 256)");
    }
    out.push_back(static_cast<Symbol>(x.get<std::uint64_t>()));
  }
  return out;
}

const json& field(const json& j, const char* key, const std::string& kind) {
  if (!j.contains(key)) invalid(kind + " model needs \"" + key + "\"");
  return j.at(key);
}

std::size_t significant_digits(std::string_view decimal) {
  std::size_t count = 0;
  bool leading = true;
  for (char c : decimal) {
    if (c < '0' || c > '9') continue;
    if (leading && c == '0') continue;
    leading = false;
    ++count;
  }
  return count;
}

MarkovChain chain_from(const json& j, const std::string& kind) {
  const json& rows = field(j, "transition", kind);
  if (!rows.is_array()) invalid("transition must be a matrix");
  std::vector<std::vector<double>> t;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    t.push_back(probabilities(rows[i], "transition[" + std::to_string(i) + "]"));
  }
  if (j.contains("states") && j.at("states").get<std::size_t>() != t.size()) {
    invalid("\"states\" disagrees with the transition matrix");
  }
  return MarkovChain(std::move(t));
}

struct Parser {
  std::filesystem::path base_dir;
  int depth = 0;

  json resolve(const json& j) const {
    if (!j.is_string()) return j;
    const auto path = base_dir / j.get<std::string>();
    std::ifstream in(path);
    if (!in) invalid("cannot read referenced model " + path.string());
    try {
      return json::parse(in);
    } catch (const json::parse_error& e) {
      invalid(path.string() + ": " + e.what());
    }
  }

  ModelPtr process(const json& raw) {
    if (++depth > 16) invalid("model nesting too deep");
    const json j = resolve(raw);
    if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) {
      invalid("model needs a string \"kind\"");
    }
    const auto kind = j.at("kind").get<std::string>();
    ModelPtr out;
    if (kind == "iid") {
      out = std::make_shared<IidModel>(probabilities(field(j, "weights", kind), "weights"));
    } else if (kind == "markov" || kind == "lumped-markov") {
      auto chain = chain_from(j, kind);
      std::vector<Symbol> labels;
      if (j.contains("labeling")) labels = symbols(j.at("labeling"), "labeling");
      auto model = std::make_shared<MarkovModel>(std::move(chain), std::move(labels),
                                                 j.value("alphabet_size", std::size_t{0}));
      if (model->kind() != kind) {
        invalid("kind \"" + kind + "\" but the labeling makes it " + std::string(model->kind()));
      }
      out = model;
    } else if (kind == "rotation") {
      const json& alpha = field(j, "alpha", kind);
      if (!alpha.is_string()) invalid("alpha must be a decimal string");
      const auto text = alpha.get<std::string>();
      if (significant_digits(text) < 30) invalid("alpha needs at least 30 significant digits");
      std::vector<Fixed128> cuts;
      for (const auto& b : field(j, "breakpoints", kind)) {
        if (!b.is_string()) invalid("breakpoints must be decimal strings");
        cuts.push_back(parse_fraction(b.get<std::string>()));
      }
      std::vector<Symbol> labels;
      if (j.contains("symbols")) labels = symbols(j.at("symbols"), "symbols");
      out = std::make_shared<RotationModel>(parse_fraction(text), std::move(cuts),
                                            std::move(labels));
    } else if (kind == "product") {
      out = std::make_shared<ProductModel>(process(field(j, "left", kind)),
                                           process(field(j, "right", kind)));
    } else {
      invalid("unknown model kind \"" + kind + "\"");
    }
    --depth;
    return out;
  }

  JointModelPtr joint(const json& j) {
    const json base = resolve(field(j, "base", "joint"));
    const auto base_kind = base.value("kind", std::string{});
    if (base_kind == "product") {
      if (j.contains("labeling_p") || j.contains("labeling_q")) {
        invalid("a product base fixes P = left factor and Q = the product symbol");
      }
      auto product = std::dynamic_pointer_cast<const ProductModel>(process(base));
      return std::make_shared<ProductJointModel>(std::move(product));
    }
    if (base_kind != "markov" && base_kind != "lumped-markov") {
      invalid("joint base must be a markov chain or a product");
    }
    return std::make_shared<HiddenJointModel>(chain_from(base, base_kind),
                                              symbols(field(j, "labeling_p", "joint"), "labeling_p"),
                                              symbols(field(j, "labeling_q", "joint"), "labeling_q"));
  }
};

std::string decimal(double x) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, end);
}

json to_json(const ProcessModel& model) {
  json j;
  j["kind"] = std::string(model.kind());
  if (const auto* iid = dynamic_cast<const IidModel*>(&model)) {
    for (double w : iid->weights()) j["weights"].push_back(decimal(w));
  } else if (const auto* markov = dynamic_cast<const MarkovModel*>(&model)) {
    j["states"] = markov->chain().states();
    for (const auto& row : markov->chain().transition()) {
      json r = json::array();
      for (double p : row) r.push_back(decimal(p));
      j["transition"].push_back(r);
    }
    j["labeling"] = markov->labeling();
    j["alphabet_size"] = markov->alphabet_size();
  } else if (const auto* rotation = dynamic_cast<const RotationModel*>(&model)) {
    j["alpha"] = format_fraction_roundtrip(rotation->alpha());
    j["breakpoints"] = json::array();
    for (std::size_t i = 1; i < rotation->cuts().size(); ++i) {
      j["breakpoints"].push_back(format_fraction_roundtrip(rotation->cuts()[i]));
    }
    j["symbols"] = rotation->symbols();
  } else if (const auto* product = dynamic_cast<const ProductModel*>(&model)) {
    j["left"] = to_json(product->left());
    j["right"] = to_json(product->right());
  } else {
    throw Error(ErrorCode::kInvalidModel, "no file form for kind " + std::string(model.kind()));
  }
  return j;
}

}  // namespace

LoadedModel parse_model(std::string_view text, const std::filesystem::path& base_dir,
                        std::string name) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kInvalidModel, std::string("model is not valid JSON: ") + e.what());
  }
  LoadedModel out;
  out.name = std::move(name);
  Parser parser{base_dir};
  try {
    out.kind = j.value("kind", std::string{});
    if (out.kind == "joint") {
      out.joint = parser.joint(j);
    } else {
      out.process = parser.process(j);
      out.kind = std::string(out.process->kind());
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidModel, e.what());
  }
  return out;
}

LoadedModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read model file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_model(buffer.str(), path.parent_path(), path.stem().string());
}

std::string model_to_text(const ProcessModel& model) { return to_json(model).dump(2) + "\n"; }

}  // namespace ergolab
