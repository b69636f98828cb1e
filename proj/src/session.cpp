#include "paretoab/session.hpp"

#include <stdexcept>
#include <string>

namespace paretoab {

ClickOrderSession to_click_order(const RawSession& s, std::size_t* orphan_orders) {
  ClickOrderSession out;
  out.session_id = s.session_id;
  out.start_ts = s.events.empty() ? 0 : s.events.front().ts;

  std::size_t orphans = 0;
  for (const Event& e : s.events) {
    if (e.action == Action::kClick) {
      out.pairs.push_back({e.item, false});
      continue;
    }
    bool attached = false;
    for (auto it = out.pairs.rbegin(); it != out.pairs.rend(); ++it) {
      if (it->item == e.item) {
        it->ordered = true;
        attached = true;
        break;
      }
    }
    if (!attached) ++orphans;
  }
  if (out.pairs.empty()) {
    throw std::invalid_argument("session " + std::to_string(s.session_id) + ": no clicks");
  }
  if (orphan_orders) *orphan_orders += orphans;
  return out;
}

RawSession to_raw(const ClickOrderSession& s) {
  RawSession raw;
  raw.session_id = s.session_id;
  Timestamp ts = s.start_ts;
  for (const ClickOrder& p : s.pairs) {
    raw.events.push_back({p.item, Action::kClick, ts++});
    if (p.ordered) raw.events.push_back({p.item, Action::kOrder, ts++});
  }
  return raw;
}

std::pair<Dataset, Dataset> temporal_split(const Dataset& d, Timestamp split_ts) {
  Dataset train{{}, d.catalog_size, split_ts};
  Dataset test{{}, d.catalog_size, split_ts};
  for (const ClickOrderSession& s : d.sessions) {
    (s.start_ts < split_ts ? train : test).sessions.push_back(s);
  }
  if (train.sessions.empty()) throw std::invalid_argument("temporal_split: empty train");
  if (test.sessions.empty()) throw std::invalid_argument("temporal_split: empty test");
  return {std::move(train), std::move(test)};
}

void validate(const Dataset& d) {
  if (d.catalog_size <= 0) throw std::invalid_argument("dataset: catalog_size must be positive");
  for (const ClickOrderSession& s : d.sessions) {
    if (s.pairs.empty()) {
      throw std::invalid_argument("session " + std::to_string(s.session_id) + ": no clicks");
    }
    for (const ClickOrder& p : s.pairs) {
      if (p.item < 0 || p.item >= d.catalog_size) {
        throw std::invalid_argument("session " + std::to_string(s.session_id) + ": item " +
                                    std::to_string(p.item) + " outside catalog of size " +
                                    std::to_string(d.catalog_size));
      }
    }
  }
}

}  // namespace paretoab
