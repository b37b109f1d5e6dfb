#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "marlob/data/store.hpp"
#include "marlob/lob/book.hpp"
#include "marlob/lob/types.hpp"

// LOBSTER market-by-order CSV ingestion.
//
// Message file, no header, one event per row:
//   time(sec.frac), type(1-7), order id, size, price(1e-4 dollars), direction(+1/-1)
// Orderbook file, no header, one row per message, D levels of
//   ask price, ask size, bid price, bid size
// with absent levels carrying non-positive size or sentinel prices.
namespace marlob::data {

inline constexpr std::int64_t kLobsterUnitsPerDollar = 10000;

namespace detail {

inline std::int64_t parse_int(std::string_view field, const char* what, std::size_t row) {
  std::int64_t value = 0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  while (first != last && (*first == ' ' || *first == '\t')) ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last)
    throw std::runtime_error(std::string("lobster: row ") + std::to_string(row + 1) +
                             ": malformed " + what + " field '" + std::string(field) + "'");
  return value;
}

// "34200.000123" -> nanoseconds since session start, fraction truncated to 9
// digits and right-padded with zeros.
inline std::int64_t parse_time_ns(std::string_view field, std::size_t row) {
  const std::size_t dot = field.find('.');
  const std::string_view sec_part = dot == std::string_view::npos ? field : field.substr(0, dot);
  const std::int64_t sec = parse_int(sec_part, "time", row);
  std::int64_t frac = 0;
  if (dot != std::string_view::npos) {
    std::string_view frac_part = field.substr(dot + 1);
    if (frac_part.size() > 9) frac_part = frac_part.substr(0, 9);
    std::size_t digits = frac_part.size();
    if (digits == 0)
      throw std::runtime_error("lobster: row " + std::to_string(row + 1) +
                               ": malformed time field");
    frac = parse_int(frac_part, "time fraction", row);
    for (std::size_t i = digits; i < 9; ++i) frac *= 10;
  }
  return sec * 1000000000ll + frac;
}

inline void split_fields(std::string_view line, std::vector<std::string_view>& out) {
  out.clear();
  std::size_t begin = 0;
  while (true) {
    const std::size_t comma = line.find(',', begin);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(begin));
      return;
    }
    out.push_back(line.substr(begin, comma - begin));
    begin = comma + 1;
  }
}

inline std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

inline std::int64_t to_ticks(std::int64_t price_units, std::int64_t units_per_tick,
                             std::size_t row) {
  if (price_units % units_per_tick != 0)
    throw std::runtime_error("lobster: row " + std::to_string(row + 1) + ": price " +
                             std::to_string(price_units) +
                             " not divisible by tick size " + std::to_string(units_per_tick));
  return price_units / units_per_tick;
}

inline lob::L2Snapshot parse_book_row(std::string_view line, std::int64_t units_per_tick,
                                      std::size_t row) {
  std::vector<std::string_view> fields;
  split_fields(line, fields);
  if (fields.size() % 4 != 0)
    throw std::runtime_error("lobster: orderbook row " + std::to_string(row + 1) +
                             ": column count " + std::to_string(fields.size()) +
                             " is not a multiple of 4");
  lob::L2Snapshot snap;
  for (std::size_t level = 0; level * 4 < fields.size(); ++level) {
    const std::int64_t ask_p = parse_int(fields[level * 4 + 0], "ask price", row);
    const std::int64_t ask_q = parse_int(fields[level * 4 + 1], "ask size", row);
    const std::int64_t bid_p = parse_int(fields[level * 4 + 2], "bid price", row);
    const std::int64_t bid_q = parse_int(fields[level * 4 + 3], "bid size", row);
    // LOBSTER pads absent levels with sentinel prices and zero sizes.
    if (ask_q > 0 && ask_p > 0 && ask_p < 9999999999ll)
      snap.asks.push_back({to_ticks(ask_p, units_per_tick, row), ask_q});
    if (bid_q > 0 && bid_p > 0)
      snap.bids.push_back({to_ticks(bid_p, units_per_tick, row), bid_q});
  }
  return snap;
}

}  // namespace detail

// Loads a LOBSTER message/orderbook file pair. Book states are sampled at
// message offsets 0, sample_every, 2*sample_every, ... ; the state keyed at
// offset k is taken from orderbook row k-1 (the row immediately preceding
// message k). Offset 0 maps to an empty book: LOBSTER ships no pre-session
// row, and replaying from empty keeps episode replay exact for stores that
// start at the session open.
inline MessageStore load_lobster(const std::string& message_path,
                                 const std::string& orderbook_path,
                                 std::int64_t units_per_tick, std::size_t sample_every) {
  if (units_per_tick < 1) throw std::invalid_argument("load_lobster: units_per_tick >= 1");
  if (sample_every == 0) throw std::invalid_argument("load_lobster: sample_every >= 1");
  std::ifstream msg_file(message_path);
  if (!msg_file) throw std::runtime_error("load_lobster: cannot open " + message_path);
  std::ifstream book_file(orderbook_path);
  if (!book_file) throw std::runtime_error("load_lobster: cannot open " + orderbook_path);

  MessageStore store;
  store.book_states.push_back(BookState{0, {}});

  std::string msg_line, book_line;
  std::vector<std::string_view> fields;
  std::size_t row = 0;
  std::int64_t prev_time = -1;
  while (std::getline(msg_file, msg_line)) {
    const std::string_view line = detail::strip_cr(msg_line);
    if (line.empty()) continue;
    if (!std::getline(book_file, book_line))
      throw std::runtime_error("load_lobster: orderbook file has fewer rows than " +
                               message_path);
    detail::split_fields(line, fields);
    if (fields.size() != 6)
      throw std::runtime_error("lobster: row " + std::to_string(row + 1) + ": expected 6 " +
                               "fields, got " + std::to_string(fields.size()));
    lob::Message m;
    m.time = detail::parse_time_ns(fields[0], row);
    if (m.time < prev_time)
      throw std::runtime_error("lobster: row " + std::to_string(row + 1) +
                               ": non-monotone time");
    prev_time = m.time;
    const std::int64_t type = detail::parse_int(fields[1], "type", row);
    if (type < 1 || type > 7)
      throw std::runtime_error("lobster: row " + std::to_string(row + 1) +
                               ": unknown event type " + std::to_string(type));
    static constexpr lob::MsgKind kKinds[7] = {
        lob::MsgKind::NewLimit,     lob::MsgKind::CancelPartial, lob::MsgKind::Delete,
        lob::MsgKind::ExecuteVisible, lob::MsgKind::ExecuteHidden, lob::MsgKind::Cross,
        lob::MsgKind::Halt};
    m.kind = kKinds[type - 1];
    m.order_id = static_cast<std::uint64_t>(detail::parse_int(fields[2], "order id", row));
    m.quantity = detail::parse_int(fields[3], "size", row);
    if (m.quantity < 0)
      throw std::runtime_error("lobster: row " + std::to_string(row + 1) + ": negative size");
    m.price = detail::to_ticks(detail::parse_int(fields[4], "price", row), units_per_tick, row);
    const std::int64_t dir = detail::parse_int(fields[5], "direction", row);
    if (dir != 1 && dir != -1)
      throw std::runtime_error("lobster: row " + std::to_string(row + 1) +
                               ": direction must be +1 or -1");
    m.side = dir == 1 ? lob::Side::Bid : lob::Side::Ask;
    m.trader_id = lob::kBackgroundTrader;
    store.messages.push_back(m);

    // Row k (just parsed into book_line) is the state after message k; it
    // seeds the book state keyed at offset k+1 when that offset is sampled.
    const std::size_t next_offset = row + 1;
    if (next_offset % sample_every == 0)
      store.book_states.push_back(
          BookState{next_offset,
                    detail::parse_book_row(detail::strip_cr(book_line), units_per_tick, row)});
    ++row;
  }
  while (std::getline(book_file, book_line)) {
    if (!detail::strip_cr(book_line).empty())
      throw std::runtime_error("load_lobster: message file has fewer rows than " +
                               orderbook_path);
  }
  // A state keyed one past the last message can never seed an episode.
  if (store.book_states.back().message_index == store.messages.size() &&
      store.book_states.size() > 1)
    store.book_states.pop_back();
  return store;
}

// Writes a store back to the LOBSTER pair format. Orderbook rows are
// reconstructed by replaying the messages, so sampled states survive a
// round trip exactly.
inline void write_lobster(const MessageStore& store, const std::string& message_path,
                          const std::string& orderbook_path, std::int64_t units_per_tick,
                          std::size_t depth) {
  std::ofstream msg_file(message_path);
  if (!msg_file) throw std::runtime_error("write_lobster: cannot open " + message_path);
  std::ofstream book_file(orderbook_path);
  if (!book_file) throw std::runtime_error("write_lobster: cannot open " + orderbook_path);

  lob::OrderBook book(1 << 18);
  std::vector<lob::TradeRecord> trades;
  lob::L2Snapshot snap;
  for (const lob::Message& m : store.messages) {
    static constexpr int kTypes[] = {1, 2, 3, 4, 5, 6, 7};
    msg_file << m.time / 1000000000ll << '.';
    const std::int64_t frac = m.time % 1000000000ll;
    char buf[16];
    std::snprintf(buf, sizeof buf, "%09lld", static_cast<long long>(frac));
    msg_file << buf << ',' << kTypes[static_cast<int>(m.kind)] << ',' << m.order_id << ','
             << m.quantity << ',' << m.price * units_per_tick << ','
             << (m.side == lob::Side::Bid ? 1 : -1) << '\n';

    trades.clear();
    book.process(m, trades);
    book.l2_snapshot(depth, snap);
    for (std::size_t level = 0; level < depth; ++level) {
      if (level > 0) book_file << ',';
      if (level < snap.asks.size())
        book_file << snap.asks[level].price * units_per_tick << ',' << snap.asks[level].quantity;
      else
        book_file << "9999999999,0";
      book_file << ',';
      if (level < snap.bids.size())
        book_file << snap.bids[level].price * units_per_tick << ',' << snap.bids[level].quantity;
      else
        book_file << "-9999999999,0";
    }
    book_file << '\n';
  }
}

}  // namespace marlob::data
