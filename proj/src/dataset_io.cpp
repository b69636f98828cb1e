#include "paretoab/dataset_io.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

#include "json.hpp"

namespace paretoab {

using nlohmann::json;

ParseError::ParseError(std::size_t line, const std::string& what)
    : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

namespace {

Action parse_action(const std::string& s, std::size_t line) {
  if (s == "click") return Action::kClick;
  if (s == "order") return Action::kOrder;
  throw ParseError(line, "unknown action \"" + s + "\"");
}

RawSession parse_record(const json& j, std::size_t line) {
  if (!j.is_object() || !j.contains("session_id") || !j.contains("events")) {
    throw ParseError(line, "expected object with session_id and events");
  }
  RawSession s;
  s.session_id = j.at("session_id").get<std::int64_t>();
  const json& events = j.at("events");
  if (!events.is_array()) throw ParseError(line, "events must be an array");
  for (const json& e : events) {
    if (!e.is_object()) throw ParseError(line, "event must be an object");
    Event ev;
    const std::int64_t item = e.at("item").get<std::int64_t>();
    if (item < 0 || item > std::numeric_limits<ItemId>::max()) {
      throw ParseError(line, "item id " + std::to_string(item) + " out of range");
    }
    ev.item = static_cast<ItemId>(item);
    ev.action = parse_action(e.at("action").get<std::string>(), line);
    ev.ts = e.at("ts").get<Timestamp>();
    if (!s.events.empty() && ev.ts < s.events.back().ts) {
      throw ParseError(line, "events not sorted by ts");
    }
    s.events.push_back(ev);
  }
  if (s.events.size() < 2) throw ParseError(line, "session needs at least 2 events");
  return s;
}

}  // namespace

Dataset read_sessions(std::istream& in, ParseStats* stats) {
  Dataset d;
  std::optional<std::int64_t> declared_catalog;
  ParseStats local;
  ItemId max_item = -1;

  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.find_first_not_of(" \t") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      throw ParseError(line, std::string("malformed record: ") + e.what());
    }
    try {
      if (d.sessions.empty() && !declared_catalog && j.is_object() && j.contains("catalog_size") &&
          !j.contains("events")) {
        declared_catalog = j.at("catalog_size").get<std::int64_t>();
        if (*declared_catalog <= 0) throw ParseError(line, "catalog_size must be positive");
        if (j.contains("split_ts")) d.split_ts = j.at("split_ts").get<Timestamp>();
        continue;
      }
      RawSession raw = parse_record(j, line);
      for (const Event& e : raw.events) {
        if (declared_catalog && e.item >= *declared_catalog) {
          throw ParseError(line, "item id " + std::to_string(e.item) +
                                     " >= declared catalog size " + std::to_string(*declared_catalog));
        }
        max_item = std::max(max_item, e.item);
      }
      d.sessions.push_back(to_click_order(raw, &local.orphan_orders));
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(line, e.what());
    }
  }
  if (d.sessions.empty()) throw ParseError(0, "no sessions");
  d.catalog_size = declared_catalog ? *declared_catalog : static_cast<std::int64_t>(max_item) + 1;
  local.sessions = d.sessions.size();
  if (stats) *stats = local;
  return d;
}

Dataset parse_sessions(const std::filesystem::path& path, ParseStats* stats) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open " + path.string());
  return read_sessions(in, stats);
}

void write_sessions(std::ostream& out, const Dataset& d) {
  nlohmann::ordered_json header;
  header["catalog_size"] = d.catalog_size;
  if (d.split_ts) header["split_ts"] = *d.split_ts;
  out << header.dump() << '\n';
  for (const ClickOrderSession& s : d.sessions) {
    const RawSession raw = to_raw(s);
    nlohmann::ordered_json rec;
    rec["session_id"] = raw.session_id;
    rec["events"] = nlohmann::ordered_json::array();
    for (const Event& e : raw.events) {
      nlohmann::ordered_json ev;
      ev["item"] = e.item;
      ev["action"] = e.action == Action::kClick ? "click" : "order";
      ev["ts"] = e.ts;
      rec["events"].push_back(std::move(ev));
    }
    out << rec.dump() << '\n';
  }
}

void write_sessions(const std::filesystem::path& path, const Dataset& d) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_sessions(out, d);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace paretoab
