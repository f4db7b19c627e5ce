#include "exf/model_io.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <json.hpp>

#include "exf/errors.hpp"
#include "exf/fixtures.hpp"

namespace exf {

using json = nlohmann::json;

namespace {

// like dump(2), but arrays of scalars stay on one line
void write_pretty(const json& j, int indent, std::string& out) {
  const std::string pad(static_cast<std::size_t>(indent + 2), ' ');
  if (j.is_object() && !j.empty()) {
    out += "{\n";
    std::size_t i = 0;
    for (auto it = j.begin(); it != j.end(); ++it, ++i) {
      out += pad + json(it.key()).dump() + ": ";
      write_pretty(it.value(), indent + 2, out);
      out += i + 1 < j.size() ? ",\n" : "\n";
    }
    out += std::string(static_cast<std::size_t>(indent), ' ') + "}";
  } else if (j.is_array() && !j.empty() && std::any_of(j.begin(), j.end(), [](const json& e) { return e.is_structured(); })) {
    out += "[\n";
    for (std::size_t i = 0; i < j.size(); ++i) {
      out += pad;
      write_pretty(j[i], indent + 2, out);
      out += i + 1 < j.size() ? ",\n" : "\n";
    }
    out += std::string(static_cast<std::size_t>(indent), ' ') + "]";
  } else if (j.is_array()) {
    out += "[";
    for (std::size_t i = 0; i < j.size(); ++i) out += (i ? ", " : "") + j[i].dump();
    out += "]";
  } else {
    out += j.dump();
  }
}

std::string join(const std::string& path, const std::string& key) { return path + "/" + key; }

void only_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw LoadError(path.empty() ? "/" : path, "expected an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw LoadError(join(path, key), "unknown field");
  }
}

const json& need(const json& j, const std::string& path, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw LoadError(join(path, key), "missing field");
  return *it;
}

Rat read_rat(const json& j, const std::string& path) {
  if (!j.is_string()) throw LoadError(path, "rationals are written as strings \"a/b\"");
  try {
    return Rat::parse(j.get<std::string>());
  } catch (const DomainError& e) {
    throw LoadError(path, e.what());
  }
}

Vec read_vec(const json& j, const std::string& path) {
  if (!j.is_array()) throw LoadError(path, "expected an array");
  Vec v;
  for (std::size_t i = 0; i < j.size(); ++i) v.push_back(read_rat(j[i], join(path, std::to_string(i))));
  return v;
}

Mat read_mat(const json& j, const std::string& path) {
  if (!j.is_array()) throw LoadError(path, "expected an array of rows");
  Mat w;
  for (std::size_t i = 0; i < j.size(); ++i) w.push_back(read_vec(j[i], join(path, std::to_string(i))));
  return w;
}

bool read_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) throw LoadError(path, "expected true or false");
  return j.get<bool>();
}

std::size_t read_size(const json& j, const std::string& path) {
  if (!j.is_number_unsigned()) throw LoadError(path, "expected a nonnegative integer");
  return j.get<std::size_t>();
}

std::string read_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw LoadError(path, "expected a string");
  return j.get<std::string>();
}

template <class E>
E read_enum(const json& j, const std::string& path, std::initializer_list<E> values) {
  const std::string s = read_string(j, path);
  for (E v : values) {
    if (to_string(v) == s) return v;
  }
  throw LoadError(path, "unknown value \"" + s + "\"");
}

std::optional<LayerNormParams> read_layernorm(const json& j, const std::string& path) {
  if (j.is_null()) return std::nullopt;
  only_keys(j, path, {"gamma", "beta", "c"});
  return LayerNormParams{read_vec(need(j, path, "gamma"), join(path, "gamma")),
                         read_vec(need(j, path, "beta"), join(path, "beta")),
                         read_rat(need(j, path, "c"), join(path, "c"))};
}

std::optional<FeedForward> read_ffnn(const json& j, const std::string& path) {
  if (j.is_null()) return std::nullopt;
  only_keys(j, path, {"w1", "b1", "activation", "w2", "b2"});
  FeedForward f;
  f.w1 = read_mat(need(j, path, "w1"), join(path, "w1"));
  f.b1 = read_vec(need(j, path, "b1"), join(path, "b1"));
  f.activation = read_enum(need(j, path, "activation"), join(path, "activation"),
                           {Activation::relu, Activation::identity});
  f.w2 = read_mat(need(j, path, "w2"), join(path, "w2"));
  f.b2 = read_vec(need(j, path, "b2"), join(path, "b2"));
  return f;
}

AttentionHead read_head(const json& j, const std::string& path) {
  only_keys(j, path, {"kind", "masking", "w_q", "w_k", "w_v", "w_o"});
  AttentionHead h;
  h.kind = read_enum(need(j, path, "kind"), join(path, "kind"), {AttentionKind::softmax, AttentionKind::average_hard});
  h.masking = read_enum(need(j, path, "masking"), join(path, "masking"), {Masking::none, Masking::causal});
  h.w_q = read_mat(need(j, path, "w_q"), join(path, "w_q"));
  h.w_k = read_mat(need(j, path, "w_k"), join(path, "w_k"));
  h.w_v = read_mat(need(j, path, "w_v"), join(path, "w_v"));
  h.w_o = read_mat(need(j, path, "w_o"), join(path, "w_o"));
  return h;
}

Layer read_layer(const json& j, const std::string& path) {
  only_keys(j, path, {"heads", "attention_residual", "attention_layernorm", "ffnn", "ffnn_residual", "ffnn_layernorm"});
  Layer l;
  const json& heads = need(j, path, "heads");
  if (!heads.is_array()) throw LoadError(join(path, "heads"), "expected an array");
  for (std::size_t i = 0; i < heads.size(); ++i) {
    l.heads.push_back(read_head(heads[i], join(join(path, "heads"), std::to_string(i))));
  }
  if (j.contains("attention_residual")) l.attention_residual = read_bool(j["attention_residual"], join(path, "attention_residual"));
  if (j.contains("attention_layernorm")) l.attention_layernorm = read_layernorm(j["attention_layernorm"], join(path, "attention_layernorm"));
  if (j.contains("ffnn")) l.ffnn = read_ffnn(j["ffnn"], join(path, "ffnn"));
  if (j.contains("ffnn_residual")) l.ffnn_residual = read_bool(j["ffnn_residual"], join(path, "ffnn_residual"));
  if (j.contains("ffnn_layernorm")) l.ffnn_layernorm = read_layernorm(j["ffnn_layernorm"], join(path, "ffnn_layernorm"));
  return l;
}

PositionRule read_position(const json& j, const std::string& path) {
  only_keys(j, path, {"kind", "component", "rows"});
  PositionRule r;
  r.kind = read_enum(need(j, path, "kind"), join(path, "kind"),
                     {PositionKind::none, PositionKind::scaled_index, PositionKind::inverse_index, PositionKind::table});
  const bool wants_component = r.kind == PositionKind::scaled_index || r.kind == PositionKind::inverse_index;
  if (wants_component) {
    r.component = read_size(need(j, path, "component"), join(path, "component"));
  } else if (j.contains("component")) {
    throw LoadError(join(path, "component"), "only index rules take a component");
  }
  if (r.kind == PositionKind::table) {
    r.rows = read_mat(need(j, path, "rows"), join(path, "rows"));
  } else if (j.contains("rows")) {
    throw LoadError(join(path, "rows"), "only table rules take rows");
  }
  return r;
}

json write_vec(const Vec& v) {
  json a = json::array();
  for (const auto& x : v) a.push_back(x.str());
  return a;
}

json write_mat(const Mat& w) {
  json a = json::array();
  for (const auto& row : w) a.push_back(write_vec(row));
  return a;
}

json write_layernorm(const std::optional<LayerNormParams>& ln) {
  if (!ln) return nullptr;
  return json{{"gamma", write_vec(ln->gamma)}, {"beta", write_vec(ln->beta)}, {"c", ln->c.str()}};
}

}  // namespace

Model parse_model(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw LoadError("", std::string("malformed JSON: ") + e.what());
  }
  only_keys(j, "", {"format_version", "param_bits", "alphabet", "dim", "token_embeddings", "position", "layers", "output"});
  const json& version = need(j, "", "format_version");
  if (!version.is_number_integer() || version.get<long>() != 1) {
    throw LoadError("/format_version", "unsupported format version (expected 1)");
  }
  Model m;
  const json& bits = need(j, "", "param_bits");
  if (!bits.is_number_integer() || bits.get<long>() < 2 || bits.get<long>() > 4096) {
    throw LoadError("/param_bits", "expected an integer in [2, 4096]");
  }
  m.param_bits = bits.get<int>();
  const json& alpha = need(j, "", "alphabet");
  if (!alpha.is_array()) throw LoadError("/alphabet", "expected an array");
  for (std::size_t i = 0; i < alpha.size(); ++i) m.alphabet.push_back(read_string(alpha[i], "/alphabet/" + std::to_string(i)));
  m.dim = read_size(need(j, "", "dim"), "/dim");
  const json& emb = need(j, "", "token_embeddings");
  if (!emb.is_object()) throw LoadError("/token_embeddings", "expected an object");
  for (const auto& [sym, v] : emb.items()) m.token_embeddings[sym] = read_vec(v, "/token_embeddings/" + sym);
  m.position = read_position(need(j, "", "position"), "/position");
  const json& layers = need(j, "", "layers");
  if (!layers.is_array()) throw LoadError("/layers", "expected an array");
  for (std::size_t i = 0; i < layers.size(); ++i) m.layers.push_back(read_layer(layers[i], "/layers/" + std::to_string(i)));
  const json& out = need(j, "", "output");
  only_keys(out, "/output", {"weights", "bias"});
  m.output.weights = read_vec(need(out, "/output", "weights"), "/output/weights");
  m.output.bias = read_rat(need(out, "/output", "bias"), "/output/bias");
  validate_model(m);
  return m;
}

std::string serialize_model(const Model& m) {
  json j;
  j["format_version"] = 1;
  j["param_bits"] = m.param_bits;
  j["alphabet"] = m.alphabet;
  j["dim"] = m.dim;
  json emb = json::object();
  for (const auto& [sym, v] : m.token_embeddings) emb[sym] = write_vec(v);
  j["token_embeddings"] = emb;
  json pos{{"kind", std::string(to_string(m.position.kind))}};
  if (m.position.kind == PositionKind::scaled_index || m.position.kind == PositionKind::inverse_index) {
    pos["component"] = m.position.component;
  }
  if (m.position.kind == PositionKind::table) pos["rows"] = write_mat(m.position.rows);
  j["position"] = pos;
  json layers = json::array();
  for (const auto& l : m.layers) {
    json heads = json::array();
    for (const auto& h : l.heads) {
      heads.push_back({{"kind", std::string(to_string(h.kind))},
                       {"masking", std::string(to_string(h.masking))},
                       {"w_q", write_mat(h.w_q)},
                       {"w_k", write_mat(h.w_k)},
                       {"w_v", write_mat(h.w_v)},
                       {"w_o", write_mat(h.w_o)}});
    }
    json ffnn = nullptr;
    if (l.ffnn) {
      ffnn = {{"w1", write_mat(l.ffnn->w1)},
              {"b1", write_vec(l.ffnn->b1)},
              {"activation", std::string(to_string(l.ffnn->activation))},
              {"w2", write_mat(l.ffnn->w2)},
              {"b2", write_vec(l.ffnn->b2)}};
    }
    layers.push_back({{"heads", heads},
                      {"attention_residual", l.attention_residual},
                      {"attention_layernorm", write_layernorm(l.attention_layernorm)},
                      {"ffnn", ffnn},
                      {"ffnn_residual", l.ffnn_residual},
                      {"ffnn_layernorm", write_layernorm(l.ffnn_layernorm)}});
  }
  j["layers"] = layers;
  j["output"] = {{"weights", write_vec(m.output.weights)}, {"bias", m.output.bias.str()}};
  std::string out;
  write_pretty(j, 0, out);
  return out + "\n";
}

Model load_model(const std::string& path) {
  constexpr std::string_view prefix = "builtin:";
  if (path.starts_with(prefix)) return builtin_model(path.substr(prefix.size()));
  std::ifstream in(path);
  if (!in) throw LoadError("", "cannot open model file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

}  // namespace exf
