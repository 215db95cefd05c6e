// JSON model files for the game module.

#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "safegame/game.h"

namespace safegame::game {

/// Malformed or inconsistent model file.
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reads `{state_dim, dynamics, u_d, u_a, disturbance, horizon, regions,
/// complement_prop, domain_box, state_set?, escape_box?}` and finalizes the
/// model. Throws ModelError naming the offending field.
GameModel model_from_json(const nlohmann::json& j);
GameModel load_model(const std::string& path);
nlohmann::json model_to_json(const GameModel& m);

Box box_from_json(const nlohmann::json& j, std::size_t dim);
nlohmann::json box_to_json(const Box& box);

}  // namespace safegame::game
