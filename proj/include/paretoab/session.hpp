#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace paretoab {

using ItemId = std::int32_t;
using Timestamp = std::int64_t;

enum class Action { kClick, kOrder };

struct Event {
  ItemId item = 0;
  Action action = Action::kClick;
  Timestamp ts = 0;

  bool operator==(const Event&) const = default;
};

/// A session as logged: events sorted by timestamp.
struct RawSession {
  std::int64_t session_id = 0;
  std::vector<Event> events;
};

struct ClickOrder {
  ItemId item = 0;
  bool ordered = false;

  bool operator==(const ClickOrder&) const = default;
};

/// One (clicked item, ordered later in the session?) pair per click event.
struct ClickOrderSession {
  std::int64_t session_id = 0;
  Timestamp start_ts = 0;
  std::vector<ClickOrder> pairs;

  bool operator==(const ClickOrderSession&) const = default;
};

struct Dataset {
  std::vector<ClickOrderSession> sessions;
  std::int64_t catalog_size = 0;
  std::optional<Timestamp> split_ts;

  bool operator==(const Dataset&) const = default;
};

/// Collapses a raw session into click/order pairs. Each order marks the most
/// recent earlier click of the same item; orders without such a click are
/// dropped and counted in `orphan_orders` when given.
ClickOrderSession to_click_order(const RawSession& s, std::size_t* orphan_orders = nullptr);

/// Inverse of to_click_order up to orphan orders: each ordered click is
/// followed immediately by its order event, timestamps count up from start_ts.
RawSession to_raw(const ClickOrderSession& s);

/// Sessions starting before `split_ts` go to train, the rest to test.
std::pair<Dataset, Dataset> temporal_split(const Dataset& d, Timestamp split_ts);

/// Checks catalog bounds and non-empty sessions; throws std::invalid_argument.
void validate(const Dataset& d);

}  // namespace paretoab
