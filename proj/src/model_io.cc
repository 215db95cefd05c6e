#include "safegame/model_io.h"

#include <fstream>

namespace safegame::game {

using nlohmann::json;

Box box_from_json(const json& j, std::size_t dim) {
  if (!j.is_array()) throw std::invalid_argument("box must be an array");
  // A single interval may be written flat when dim == 1.
  if (dim == 1 && j.size() == 2 && j[0].is_number())
    return {{j[0].get<double>(), j[1].get<double>()}};
  if (j.size() != dim)
    throw std::invalid_argument("box needs " + std::to_string(dim) +
                                " intervals");
  Box box;
  for (const auto& iv : j) {
    if (!iv.is_array() || iv.size() != 2)
      throw std::invalid_argument("interval must be [lo, hi]");
    box.push_back({iv[0].get<double>(), iv[1].get<double>()});
  }
  return box;
}

json box_to_json(const Box& box) {
  json out = json::array();
  for (const auto& iv : box) out.push_back({iv.lo, iv.hi});
  return out;
}

namespace {

// Runs `fn`, prefixing any failure with the field name.
template <typename Fn>
auto field(const std::string& name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ModelError&) {
    throw;
  } catch (const std::exception& e) {
    throw ModelError("model field '" + name + "': " + e.what());
  }
}

int action_dim(const json& j, const char* key) {
  if (!j.contains(key)) return 0;
  return field(key, [&] { return j.at(key).at("dim").get<int>(); });
}

SemialgebraicSet set_from(const GameModel& m, const json& ineqs) {
  std::vector<poly::Polynomial> g;
  for (const auto& s : ineqs) g.push_back(m.parse(s.get<std::string>()));
  return SemialgebraicSet(std::move(g));
}

}  // namespace

GameModel model_from_json(const json& j) {
  if (!j.is_object()) throw ModelError("model must be a JSON object");
  const int n = field("state_dim", [&] { return j.at("state_dim").get<int>(); });
  const int nd = action_dim(j, "u_d");
  const int na = action_dim(j, "u_a");
  const json dist = j.value("disturbance", json::object());
  const int nw = field("disturbance", [&] { return dist.value("dim", n); });
  GameModel m = field("state_dim", [&] { return GameModel(n, nd, na, nw); });

  field("dynamics", [&] {
    for (const auto& s : j.at("dynamics"))
      m.dynamics.push_back(m.parse(s.get<std::string>()));
  });
  if (nd > 0)
    field("u_d", [&] { m.ud_box = box_from_json(j.at("u_d").at("box"), nd); });
  if (na > 0)
    field("u_a", [&] { m.ua_box = box_from_json(j.at("u_a").at("box"), na); });
  field("disturbance", [&] {
    const std::string law = dist.value("law", "uniform");
    if (law == "uniform") {
      m.disturbance.law = Law::kUniform;
      const auto s = dist.value("support", json::array({-1.0, 1.0}));
      m.disturbance.lo = s.at(0).get<double>();
      m.disturbance.hi = s.at(1).get<double>();
    } else if (law == "gaussian") {
      m.disturbance.law = Law::kGaussian;
      m.disturbance.sigma = dist.at("sigma").get<double>();
    } else if (law == "moments") {
      m.disturbance.law = Law::kMoments;
      m.disturbance.moments = dist.at("moments").get<std::vector<double>>();
    } else {
      throw std::invalid_argument("unknown law '" + law + "'");
    }
  });
  field("horizon", [&] { m.horizon = j.at("horizon").get<int>(); });
  field("regions", [&] {
    for (const auto& r : j.at("regions"))
      m.regions.push_back(
          {r.at("prop").get<std::string>(), set_from(m, r.at("ineqs"))});
  });
  if (j.contains("complement_prop"))
    field("complement_prop", [&] {
      m.complement_prop = j.at("complement_prop").get<std::string>();
    });
  field("domain_box",
        [&] { m.domain_box = box_from_json(j.at("domain_box"), n); });
  if (j.contains("escape_box"))
    field("escape_box",
          [&] { m.escape_box = box_from_json(j.at("escape_box"), n); });
  if (j.contains("state_set"))
    field("state_set", [&] { m.state_set = set_from(m, j.at("state_set")); });
  field("model", [&] { m.finalize(); });
  return m;
}

GameModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open model file '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ModelError("model file '" + path + "' is not valid JSON: " + e.what());
  }
  return model_from_json(j);
}

json model_to_json(const GameModel& m) {
  json j;
  j["state_dim"] = m.state_dim();
  json dyn = json::array();
  for (const auto& f : m.dynamics) dyn.push_back(poly::to_string(f));
  j["dynamics"] = dyn;
  if (m.ud_dim() > 0) j["u_d"] = {{"dim", m.ud_dim()}, {"box", box_to_json(m.ud_box)}};
  if (m.ua_dim() > 0) j["u_a"] = {{"dim", m.ua_dim()}, {"box", box_to_json(m.ua_box)}};
  json dist = {{"dim", m.w_dim()}};
  switch (m.disturbance.law) {
    case Law::kUniform:
      dist["law"] = "uniform";
      dist["support"] = {m.disturbance.lo, m.disturbance.hi};
      break;
    case Law::kGaussian:
      dist["law"] = "gaussian";
      dist["sigma"] = m.disturbance.sigma;
      break;
    case Law::kMoments:
      dist["law"] = "moments";
      dist["moments"] = m.disturbance.moments;
      break;
  }
  j["disturbance"] = dist;
  j["horizon"] = m.horizon;
  json regions = json::array();
  for (const auto& r : m.regions) {
    json ineqs = json::array();
    for (const auto& g : r.set.ineqs()) ineqs.push_back(poly::to_string(g));
    regions.push_back({{"prop", r.prop}, {"ineqs", ineqs}});
  }
  j["regions"] = regions;
  if (m.complement_prop) j["complement_prop"] = *m.complement_prop;
  j["domain_box"] = box_to_json(m.domain_box);
  if (m.escape_box != m.domain_box) j["escape_box"] = box_to_json(m.escape_box);
  if (!m.state_set.is_universal()) {
    json s = json::array();
    for (const auto& g : m.state_set.ineqs()) s.push_back(poly::to_string(g));
    j["state_set"] = s;
  }
  return j;
}

}  // namespace safegame::game
