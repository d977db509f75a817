#include "roomclear/floorplan.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace roomclear {

namespace {

std::string_view trim(std::string_view s)
{
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) { s.remove_prefix(1); }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) { s.remove_suffix(1); }
  return s;
}

struct MetaValue
{
  std::string value;
  int         line = 0;
  int         column = 0;
};

[[noreturn]] void bad_value(MetaValue const &v, std::string const &what)
{
  throw ScenarioError(ScenarioErrc::bad_value, what + " '" + v.value + "'", v.line, v.column);
}

int parse_int(MetaValue const &v)
{
  int         out = 0;
  auto const *end = v.value.data() + v.value.size();
  auto [ptr, ec] = std::from_chars(v.value.data(), end, out);
  if (ec != std::errc() || ptr != end) { bad_value(v, "expected integer, got"); }
  return out;
}

double parse_double(std::string_view text, MetaValue const &v)
{
  double      out = 0;
  auto const *end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  if (text.empty() || ec != std::errc() || ptr != end) { bad_value(v, "expected number, got"); }
  return out;
}

bool parse_bool(MetaValue const &v)
{
  if (v.value == "true") { return true; }
  if (v.value == "false") { return false; }
  bad_value(v, "expected true or false, got");
}

RewardConfig parse_reward(MetaValue const &v)
{
  std::string_view const text = v.value;
  if (text == "sparse") { return {RewardKind::sparse, 0.0}; }
  if (text == "default") { return {RewardKind::dense, 0.0}; }
  if (text == "civilian") { return {RewardKind::civilian, 0.0}; }
  constexpr std::string_view prefix = "death_penalty:";
  if (text.substr(0, prefix.size()) == prefix) {
    return {RewardKind::death_penalty, parse_double(text.substr(prefix.size()), v)};
  }
  bad_value(v, "unknown reward");
}

EnemyBehavior parse_behavior(MetaValue const &v)
{
  if (v.value == "stationary") { return EnemyBehavior::stationary; }
  if (v.value == "path") { return EnemyBehavior::path; }
  if (v.value == "path_fire") { return EnemyBehavior::path_then_fire; }
  bad_value(v, "unknown enemy behavior");
}

std::vector<Coord> parse_route(MetaValue const &v)
{
  std::vector<Coord> route;
  std::string_view   rest = v.value;
  while (!rest.empty()) {
    auto const       semi = rest.find(';');
    std::string_view item = trim(rest.substr(0, semi));
    rest = semi == std::string_view::npos ? std::string_view{} : rest.substr(semi + 1);
    auto const comma = item.find(',');
    if (comma == std::string_view::npos) { bad_value(v, "expected x,y pairs in route"); }
    Coord       c;
    auto const  xs = trim(item.substr(0, comma));
    auto const  ys = trim(item.substr(comma + 1));
    auto [px, ex] = std::from_chars(xs.data(), xs.data() + xs.size(), c.x);
    auto [py, ey] = std::from_chars(ys.data(), ys.data() + ys.size(), c.y);
    if (ex != std::errc() || ey != std::errc() || px != xs.data() + xs.size() || py != ys.data() + ys.size()) {
      bad_value(v, "expected x,y pairs in route");
    }
    route.push_back(c);
  }
  if (route.empty()) { bad_value(v, "empty route"); }
  return route;
}

std::string format_double(double value)
{
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

EnemyBehavior default_behavior(EnemySpec const &e)
{
  return e.route.empty() ? EnemyBehavior::stationary : EnemyBehavior::path;
}

} // namespace

Scenario parse_scenario(std::string_view text)
{
  enum class Section { none, map, meta };
  Section                          section = Section::none;
  std::vector<std::string>         rows;
  std::vector<int>                 row_lines;
  std::map<std::string, MetaValue> meta;
  bool                             saw_map = false;

  int line_no = 0;
  while (!text.empty()) {
    auto const nl = text.find('\n');
    std::string_view raw = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') { raw.remove_suffix(1); }
    auto const line = trim(raw);
    if (line.empty()) { continue; }

    if (line.front() == '[') {
      if (line == "[map]") {
        section = Section::map;
        saw_map = true;
      } else if (line == "[meta]") {
        section = Section::meta;
      } else {
        throw ScenarioError(ScenarioErrc::unknown_section, "unknown section " + std::string(line), line_no, 1);
      }
      continue;
    }

    switch (section) {
    case Section::none:
      if (line.front() == ';') { continue; }
      throw ScenarioError(ScenarioErrc::missing_section, "content before any section", line_no, 1);
    case Section::map:
      for (std::size_t i = 0; i < raw.size(); ++i) {
        if (std::string_view("#.+AEC").find(raw[i]) == std::string_view::npos) {
          throw ScenarioError(ScenarioErrc::bad_map_character, std::string("unexpected map character '") + raw[i] + "'",
                              line_no, static_cast<int>(i) + 1);
        }
      }
      if (!rows.empty() && raw.size() != rows.front().size()) {
        throw ScenarioError(ScenarioErrc::ragged_rows,
                            "row has " + std::to_string(raw.size()) + " cells, expected " +
                              std::to_string(rows.front().size()),
                            line_no, static_cast<int>(std::min(raw.size(), rows.front().size())) + 1);
      }
      rows.emplace_back(raw);
      row_lines.push_back(line_no);
      break;
    case Section::meta: {
      if (line.front() == ';' || line.front() == '#') { continue; }
      auto const eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw ScenarioError(ScenarioErrc::malformed_line, "expected key=value", line_no, 1);
      }
      std::string key(trim(line.substr(0, eq)));
      MetaValue   value{std::string(trim(line.substr(eq + 1))), line_no,
                      static_cast<int>(raw.find('=') + 2)};
      if (!meta.emplace(key, value).second) {
        throw ScenarioError(ScenarioErrc::duplicate_key, "key " + key + " given twice", line_no, 1);
      }
      break;
    }
    }
  }
  if (!saw_map) { throw ScenarioError(ScenarioErrc::missing_section, "no [map] section"); }
  if (rows.empty()) { throw ScenarioError(ScenarioErrc::empty_map, "[map] section is empty"); }

  int const height = static_cast<int>(rows.size());
  int const width = static_cast<int>(rows.front().size());
  Grid      grid(width, height);
  Scenario  s;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      char const ch = rows[y][x];
      bool const border = x == 0 || y == 0 || x == width - 1 || y == height - 1;
      if (border && (ch == 'A' || ch == 'E' || ch == 'C')) {
        throw ScenarioError(ScenarioErrc::spawn_not_on_floor, "spawn not on floor", row_lines[y], x + 1);
      }
      if (border && ch != '#') {
        throw ScenarioError(ScenarioErrc::border_not_wall, "border cell is not a wall", row_lines[y], x + 1);
      }
      switch (ch) {
      case '#': grid.set({x, y}, CellKind::wall); break;
      case '+': grid.set({x, y}, CellKind::door); break;
      default: grid.set({x, y}, CellKind::floor); break;
      }
      if (ch == 'A') { s.agent_spawns.push_back({x, y}); }
      if (ch == 'E') { s.enemies.push_back(EnemySpec{{x, y}, 1, EnemyBehavior::stationary, {}}); }
      if (ch == 'C') { s.civilians.push_back({x, y}); }
    }
  }

  std::map<int, EnemyBehavior> behaviors;
  for (auto const &[key, value] : meta) {
    if (key == "step_limit") {
      s.step_limit = parse_int(value);
      if (s.step_limit < 1) { bad_value(value, "step_limit must be positive, got"); }
    } else if (key == "order_sync") {
      s.ruleset.order_sync = parse_bool(value);
    } else if (key == "reward") {
      s.reward = parse_reward(value);
    } else if (key == "r_complete") {
      s.r_complete = parse_double(value.value, value);
    } else if (key == "agent_hp") {
      s.agent_hp = parse_int(value);
      if (s.agent_hp < 1) { bad_value(value, "agent_hp must be positive, got"); }
    } else if (key == "enemy_hp") {
      s.enemy_hp = parse_int(value);
      if (s.enemy_hp < 1) { bad_value(value, "enemy_hp must be positive, got"); }
    } else if (key.starts_with("enemy_path.") || key.starts_with("enemy_behavior.")) {
      auto const dot = key.find('.');
      MetaValue  index_text{key.substr(dot + 1), value.line, 1};
      int const  k = parse_int(index_text);
      if (k < 0 || k >= static_cast<int>(s.enemies.size())) {
        throw ScenarioError(ScenarioErrc::path_enemy_out_of_range, "no enemy with index " + std::to_string(k),
                            value.line, 1);
      }
      if (key.starts_with("enemy_path.")) {
        s.enemies[k].route = parse_route(value);
      } else {
        behaviors[k] = parse_behavior(value);
      }
    } else {
      throw ScenarioError(ScenarioErrc::unknown_key, "unknown key " + key, value.line, 1);
    }
  }
  for (auto &e : s.enemies) {
    e.hp = s.enemy_hp;
    e.behavior = default_behavior(e);
  }
  for (auto [k, b] : behaviors) { s.enemies[k].behavior = b; }

  s.floorplan = FloorPlan::from_grid(std::move(grid));
  validate_scenario(s);
  return s;
}

std::string serialize_scenario(Scenario const &s)
{
  std::ostringstream out;
  auto const        &grid = s.floorplan.grid;
  std::vector<std::string> rows(grid.height(), std::string(grid.width(), '#'));
  for (int y = 0; y < grid.height(); ++y) {
    for (int x = 0; x < grid.width(); ++x) {
      switch (grid.at({x, y})) {
      case CellKind::wall: rows[y][x] = '#'; break;
      case CellKind::floor: rows[y][x] = '.'; break;
      case CellKind::door: rows[y][x] = '+'; break;
      }
    }
  }
  for (auto c : s.agent_spawns) { rows[c.y][c.x] = 'A'; }
  for (auto const &e : s.enemies) { rows[e.spawn.y][e.spawn.x] = 'E'; }
  for (auto c : s.civilians) { rows[c.y][c.x] = 'C'; }

  out << "[map]\n";
  for (auto const &row : rows) { out << row << '\n'; }
  out << "[meta]\n";
  out << "step_limit=" << s.step_limit << '\n';
  out << "order_sync=" << (s.ruleset.order_sync ? "true" : "false") << '\n';
  out << "reward=" << format_reward_config(s.reward) << '\n';
  out << "r_complete=" << format_double(s.r_complete) << '\n';
  out << "agent_hp=" << s.agent_hp << '\n';
  out << "enemy_hp=" << s.enemy_hp << '\n';

  // Entities are numbered in row-major spawn order when parsed back.
  std::vector<std::size_t> order(s.enemies.size());
  for (std::size_t i = 0; i < order.size(); ++i) { order[i] = i; }
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return s.enemies[a].spawn < s.enemies[b].spawn; });
  for (std::size_t k = 0; k < order.size(); ++k) {
    auto const &e = s.enemies[order[k]];
    if (!e.route.empty()) {
      out << "enemy_path." << k << '=';
      for (std::size_t i = 0; i < e.route.size(); ++i) {
        out << (i ? ";" : "") << e.route[i].x << ',' << e.route[i].y;
      }
      out << '\n';
    }
    if (e.behavior != default_behavior(e)) {
      out << "enemy_behavior." << k << '='
          << (e.behavior == EnemyBehavior::stationary ? "stationary"
              : e.behavior == EnemyBehavior::path     ? "path"
                                                      : "path_fire")
          << '\n';
    }
  }
  return out.str();
}

RewardConfig parse_reward_config(std::string_view text)
{
  return parse_reward(MetaValue{std::string(trim(text)), 0, 0});
}

std::string format_reward_config(RewardConfig const &config)
{
  switch (config.kind) {
  case RewardKind::sparse: return "sparse";
  case RewardKind::dense: return "default";
  case RewardKind::civilian: return "civilian";
  case RewardKind::death_penalty: return "death_penalty:" + format_double(config.death_penalty);
  }
  return "default";
}

Scenario load_scenario(std::string const &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) { throw std::runtime_error("cannot open scenario file " + path); }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

} // namespace roomclear
