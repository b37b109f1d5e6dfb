#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "marlob/data/lobster.hpp"
#include "marlob/data/store.hpp"
#include "marlob/data/synth.hpp"
#include "marlob/lob/book.hpp"

using namespace marlob;
using data::build_episode_index;
using data::MessageStore;
using data::slice_for_step;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("marlob_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

MessageStore make_store(std::size_t n) {
  MessageStore store;
  for (std::size_t i = 0; i < n; ++i) {
    lob::Message m;
    m.time = static_cast<std::int64_t>(i);
    m.kind = lob::MsgKind::Halt;
    store.messages.push_back(m);
  }
  return store;
}

}  // namespace

TEST_CASE("lobster message rows map to messages") {
  TempDir dir;
  write_file(dir.file("msg.csv"),
             "34200.000123, 1, 42, 10, 3148000, 1\n"
             "34200.000124, 7, 0, 0, 3148000, -1\n");
  write_file(dir.file("book.csv"),
             "3149000,5,3148000,10\n"
             "3149000,5,3148000,10\n");
  const auto store = data::load_lobster(dir.file("msg.csv"), dir.file("book.csv"), 100, 1);
  REQUIRE(store.messages.size() == 2);
  const auto& m = store.messages[0];
  CHECK(m.kind == lob::MsgKind::NewLimit);
  CHECK(m.side == lob::Side::Bid);
  CHECK(m.price == 31480);
  CHECK(m.quantity == 10);
  CHECK(m.order_id == 42);
  CHECK(m.time == 34200000123000ll);  // 34200 s + 123 us
  CHECK(m.trader_id == 0);
  CHECK(store.messages[1].kind == lob::MsgKind::Halt);

  // Sampled states: offset 0 is an empty book, offset 1 comes from book row 0.
  REQUIRE(store.book_states.size() == 2);
  CHECK(store.book_states[0].message_index == 0);
  CHECK(store.book_states[0].snapshot.bids.empty());
  REQUIRE(store.book_states[1].message_index == 1);
  REQUIRE(store.book_states[1].snapshot.bids.size() == 1);
  CHECK(store.book_states[1].snapshot.bids[0] == lob::L2Level{31480, 10});
  CHECK(store.book_states[1].snapshot.asks[0] == lob::L2Level{31490, 5});
}

TEST_CASE("lobster loader rejects malformed inputs") {
  TempDir dir;

  SECTION("row count mismatch") {
    write_file(dir.file("msg.csv"),
               "1.0,1,1,1,100,1\n"
               "2.0,1,2,1,100,1\n");
    write_file(dir.file("book.csv"), "100,1,90,1\n");
    CHECK_THROWS_WITH(data::load_lobster(dir.file("msg.csv"), dir.file("book.csv"), 1, 1),
                      Catch::Matchers::ContainsSubstring("fewer rows"));
  }

  SECTION("malformed row names the row number") {
    write_file(dir.file("msg.csv"),
               "1.0,1,1,1,100,1\n"
               "2.0,1,xyz,1,100,1\n");
    write_file(dir.file("book.csv"), "100,1,90,1\n100,1,90,1\n");
    CHECK_THROWS_WITH(data::load_lobster(dir.file("msg.csv"), dir.file("book.csv"), 1, 1),
                      Catch::Matchers::ContainsSubstring("row 2"));
  }

  SECTION("non-monotone time") {
    write_file(dir.file("msg.csv"),
               "2.0,1,1,1,100,1\n"
               "1.0,1,2,1,100,1\n");
    write_file(dir.file("book.csv"), "100,1,90,1\n100,1,90,1\n");
    CHECK_THROWS_WITH(data::load_lobster(dir.file("msg.csv"), dir.file("book.csv"), 1, 1),
                      Catch::Matchers::ContainsSubstring("non-monotone"));
  }
}

TEST_CASE("episode index arithmetic") {
  const auto store = make_store(12800);

  SECTION("non-overlapping stride") {
    const auto index = build_episode_index(store, 64, 100, 64);
    CHECK(index.starts == std::vector<std::size_t>{0, 6400});
  }

  SECTION("overlapping stride is a superset") {
    const auto index = build_episode_index(store, 64, 100, 32);
    CHECK(index.starts == std::vector<std::size_t>{0, 3200, 6400});
  }

  SECTION("store shorter than one episode") {
    const auto index = build_episode_index(make_store(6399), 64, 100, 64);
    CHECK(index.starts.empty());
  }

  SECTION("windows stay in bounds") {
    for (int stride : {1, 3, 17, 64}) {
      const auto index = build_episode_index(store, 64, 100, stride);
      for (const std::size_t start : index.starts) CHECK(start + 6400 <= 12800);
      CHECK(!index.starts.empty());
    }
  }
}

TEST_CASE("slice_for_step indexes the right window") {
  const auto store = make_store(12800);
  const auto index = build_episode_index(store, 64, 100, 64);

  const auto first = slice_for_step(store, index, 0, 0);
  CHECK(first.size() == 100);
  CHECK(first.data() == store.messages.data());

  const auto last = slice_for_step(store, index, 1, 63);
  CHECK(last.data() == store.messages.data() + 12700);
  CHECK(last.size() == 100);

  CHECK_THROWS_AS(slice_for_step(store, index, 0, 64), std::out_of_range);
  CHECK_THROWS_AS(slice_for_step(store, index, 2, 0), std::out_of_range);
}

TEST_CASE("synthetic stream is deterministic per seed") {
  data::SynthConfig cfg;
  cfg.n_messages = 5000;
  const auto a = data::synth_generate(cfg, 7);
  const auto b = data::synth_generate(cfg, 7);
  CHECK(a == b);
  const auto c = data::synth_generate(cfg, 8);
  CHECK(a.messages != c.messages);
}

TEST_CASE("zero volatility keeps prices in a fixed band") {
  data::SynthConfig cfg;
  cfg.n_messages = 20000;
  cfg.volatility = 0.0;
  cfg.initial_mid = 500;
  const auto store = data::synth_generate(cfg, 3);
  for (const auto& m : store.messages) {
    if (m.kind != lob::MsgKind::NewLimit) continue;
    CHECK(m.price >= 500 - cfg.band);
    CHECK(m.price <= 501 + cfg.band);
  }
}

TEST_CASE("synthetic stream replays cleanly through the book") {
  data::SynthConfig cfg;
  cfg.n_messages = 10000;
  const auto store = data::synth_generate(cfg, 11);
  lob::OrderBook book(1 << 15);
  std::vector<lob::TradeRecord> trades;
  for (const auto& m : store.messages) {
    trades.clear();
    book.process(m, trades);
    REQUIRE(book.live_orders(lob::Side::Bid) + book.live_orders(lob::Side::Ask) <
            book.capacity());
  }
  CHECK(book.live_orders(lob::Side::Bid) > 0);
  CHECK(book.live_orders(lob::Side::Ask) > 0);

  // Sampled states match an independent prefix replay.
  lob::OrderBook replay(1 << 15);
  std::size_t next = 0;
  for (std::size_t i = 0; i <= store.messages.size(); ++i) {
    if (next < store.book_states.size() && store.book_states[next].message_index == i) {
      CHECK(replay.l2_snapshot(cfg.state_depth) == store.book_states[next].snapshot);
      ++next;
    }
    if (i == store.messages.size()) break;
    trades.clear();
    replay.process(store.messages[i], trades);
  }
  CHECK(next == store.book_states.size());
}

TEST_CASE("lobster round trip is bit-identical") {
  data::SynthConfig cfg;
  cfg.n_messages = 6400;
  cfg.state_sample_every = 800;
  const auto store = data::synth_generate(cfg, 21);

  TempDir dir;
  data::write_lobster(store, dir.file("m.csv"), dir.file("b.csv"), 100, cfg.state_depth);
  const auto reloaded =
      data::load_lobster(dir.file("m.csv"), dir.file("b.csv"), 100, cfg.state_sample_every);
  CHECK(reloaded == store);
}
