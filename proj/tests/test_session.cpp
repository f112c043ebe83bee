#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <optional>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "wah/session.hpp"

using namespace wah;
using json = nlohmann::json;
namespace fs = std::filesystem;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace asio = boost::asio;
using tcp = asio::ip::tcp;

namespace {

json action_msg(const Action& a, int tick) { return {{"type", "action"}, {"tick", tick}, {"action", action_to_json(a)}}; }

json rating_msg(int g, int h, int t) {
  return {{"type", "rating"}, {"goal_knowledge", g}, {"helpfulness", h}, {"trust", t}, {"comment", "fine"}};
}

const json* find_type(const std::vector<json>& msgs, const std::string& type) {
  for (const auto& m : msgs)
    if (m.value("type", "") == type) return &m;
  return nullptr;
}

struct HttpReply {
  unsigned status = 0;
  std::string body;
};

HttpReply http_request(int port, http::verb verb, const std::string& target) {
  asio::io_context ioc;
  tcp::socket sock(ioc);
  sock.connect({asio::ip::make_address("127.0.0.1"), static_cast<unsigned short>(port)});
  http::request<http::string_body> req{verb, target, 11};
  req.set(http::field::host, "localhost");
  req.keep_alive(false);
  req.prepare_payload();
  http::write(sock, req);
  beast::flat_buffer buf;
  http::response<http::string_body> res;
  http::read(sock, buf, res);
  return {res.result_int(), res.body()};
}

class WsClient {
 public:
  explicit WsClient(int port) : ws_(ioc_) {
    beast::get_lowest_layer(ws_).connect({asio::ip::make_address("127.0.0.1"), static_cast<unsigned short>(port)});
    ws_.handshake("localhost", "/ws");
    ws_.text(true);
  }
  void send(const json& j) { ws_.write(asio::buffer(j.dump())); }
  json recv() {
    beast::flat_buffer buf;
    ws_.read(buf);
    return json::parse(beast::buffers_to_string(buf.data()));
  }
  // Messages up to and including the next available_actions, episode_end, rating or error.
  std::vector<json> recv_turn() {
    std::vector<json> out;
    while (true) {
      out.push_back(recv());
      const auto t = out.back().value("type", "");
      if (t == "available_actions" || t == "episode_end" || t == "rating" || t == "error") return out;
    }
  }
  void close() { ws_.close(websocket::close_code::normal); }

 private:
  asio::io_context ioc_;
  websocket::stream<tcp::socket> ws_;
};

}  // namespace

class SessionTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = new fs::path(fs::temp_directory_path() / "wah_session_test");
    fs::remove_all(*root_);
    DatasetConfig cfg;
    cfg.train = 4;
    cfg.test = 2;
    cfg.seed = 5;
    ds_ = new Dataset(generate_dataset((*root_ / "dataset").string(), cfg));
  }
  static void TearDownTestSuite() {
    fs::remove_all(*root_);
    delete ds_;
    delete root_;
  }
  void SetUp() override {
    data_ = (*root_ / ::testing::UnitTest::GetInstance()->current_test_info()->name()).string();
    fs::remove_all(data_);
    store_ = std::make_unique<SessionStore>(data_);
  }
  int test_task() const { return ds_->split(Split::test).front().id; }

  static fs::path* root_;
  static Dataset* ds_;
  std::string data_;
  std::unique_ptr<SessionStore> store_;
};

fs::path* SessionTest::root_ = nullptr;
Dataset* SessionTest::ds_ = nullptr;

TEST_F(SessionTest, SoloMessageLogReplaysToSameHash) {
  const int task = test_task();
  Session s(*ds_, task, "none", "solo", store_.get());
  auto first = s.start();
  ASSERT_NE(find_type(first, "hello"), nullptr);
  ASSERT_NE(find_type(first, "available_actions"), nullptr);
  const NodeId alice = find_type(first, "hello")->at("alice").get<NodeId>();

  PlannerAgent player(make_agent_state(inventory_of(s.scene()), alice, ds_->task(task).goal, {}, 1), "player");
  std::vector<json> log;
  const json* end = nullptr;
  std::vector<json> out;
  while (!s.ended()) {
    Action a = player.act(visible_set(s.scene(), alice));
    log.push_back(action_msg(a, s.scene().tick));
    out = s.handle(log.back());
    ASSERT_EQ(out.front().at("type"), "tick_result");
    ASSERT_EQ(out.front().at("tick"), log.back().at("tick"));
    end = find_type(out, "episode_end");
  }
  ASSERT_NE(end, nullptr);
  EXPECT_EQ(end->at("status"), "success");
  EXPECT_EQ(end->at("T").get<int>(), static_cast<int>(log.size()));
  EXPECT_FALSE(end->at("rate").get<bool>());
  const std::string hash = end->at("trace_hash");

  Session again(*ds_, task, "none", "solo-replay", nullptr);
  again.start();
  std::vector<json> last;
  for (const auto& m : log) last = again.handle(m);
  ASSERT_NE(find_type(last, "episode_end"), nullptr);
  EXPECT_EQ(find_type(last, "episode_end")->at("trace_hash"), hash);

  auto stored = load_trace((fs::path(data_) / "traces" / "solo.jsonl").string());
  EXPECT_EQ(stored.status, EpisodeStatus::success);
  EXPECT_FALSE(verify_replay(stored).has_value());
  EXPECT_EQ(store_->solo_length(task), static_cast<double>(log.size()));
}

TEST_F(SessionTest, ProtocolErrors) {
  Session s(*ds_, test_task(), "hp_true", "errs", store_.get());
  auto first = s.start();
  const NodeId alice = find_type(first, "hello")->at("alice").get<NodeId>();
  const NodeId bob = find_type(first, "hello")->at("bob").get<NodeId>();

  auto err = s.handle(rating_msg(4, 4, 4));
  EXPECT_EQ(err.at(0).at("type"), "error");
  err = s.handle(action_msg(Action::noop(alice), 7));
  EXPECT_EQ(err.at(0).at("type"), "error");
  err = s.handle(action_msg(Action::noop(bob), 0));
  EXPECT_EQ(err.at(0).at("type"), "error");
  err = s.handle({{"type", "dance"}});
  EXPECT_EQ(err.at(0).at("type"), "error");
  err = s.handle({{"type", "action"}, {"action", {{"kind", "teleport"}}}});
  EXPECT_EQ(err.at(0).at("type"), "error");
  EXPECT_EQ(s.scene().tick, 0);
  EXPECT_TRUE(s.trace().ticks.empty());

  // an illegal action is still a tick, with its failure reported
  auto bad = s.handle(action_msg(Action::make(ActionKind::put_on, alice, 0, 0), 0));
  ASSERT_EQ(bad.at(0).at("type"), "tick_result");
  EXPECT_NE(bad.at(0).at("outcome"), "ok");
  EXPECT_EQ(s.scene().tick, 1);

  EXPECT_THROW(Session(*ds_, test_task(), "alice_alone", "x", nullptr), Error);
  EXPECT_THROW(Session(*ds_, 9999, "none", "x", nullptr), Error);
}

TEST_F(SessionTest, DisconnectStoresAbandonedTrace) {
  {
    Session s(*ds_, test_task(), "random", "gone", store_.get());
    auto first = s.start();
    const NodeId alice = find_type(first, "hello")->at("alice").get<NodeId>();
    s.handle(action_msg(Action::noop(alice), 0));
    s.disconnect();
  }
  auto t = load_trace((fs::path(data_) / "traces" / "gone.jsonl").string());
  EXPECT_EQ(t.status, EpisodeStatus::abandoned);
  EXPECT_EQ(t.length(), 1);
}

TEST_F(SessionTest, ServerEpisodeAndRating) {
  ServerOptions so;
  so.port = 0;
  so.data_dir = data_;
  so.dataset_dir = ds_->dir;
  so.static_dir = (*root_ / "static").string();
  fs::create_directories(so.static_dir);
  std::ofstream(fs::path(so.static_dir) / "index.html") << "<html></html>";
  Server server(so);
  const int port = server.start();
  ASSERT_GT(port, 0);

  auto tasks = http_request(port, http::verb::get, "/tasks");
  EXPECT_EQ(tasks.status, 200u);
  EXPECT_EQ(json::parse(tasks.body).size(), ds_->tasks.size());
  EXPECT_EQ(http_request(port, http::verb::get, "/").status, 200u);
  EXPECT_EQ(http_request(port, http::verb::get, "/missing.js").status, 404u);
  EXPECT_EQ(http_request(port, http::verb::get, "/../secret").status, 404u);
  EXPECT_EQ(http_request(port, http::verb::post, "/tasks").status, 405u);

  {
    WsClient ws(port);
    ws.send({{"type", "action"}});
    EXPECT_EQ(ws.recv().at("type"), "error");
    ws.send({{"type", "hello"}, {"task", test_task()}, {"baseline", "hp_true"}});
    auto turn = ws.recv_turn();
    ASSERT_NE(find_type(turn, "hello"), nullptr);
    const NodeId alice = find_type(turn, "hello")->at("alice").get<NodeId>();
    std::optional<json> end;
    for (int t = 0; !end; ++t) {
      ASSERT_LE(t, kDefaultStepLimit);
      ws.send(action_msg(Action::noop(alice), t));
      turn = ws.recv_turn();
      ASSERT_EQ(turn.front().at("type"), "tick_result");
      if (const json* e = find_type(turn, "episode_end")) end = *e;
    }
    EXPECT_TRUE(end->at("rate").get<bool>());
    ws.send(rating_msg(6, 5, 7));
    auto ack = ws.recv();
    ASSERT_EQ(ack.at("type"), "rating") << ack.dump();
    ws.send(rating_msg(1, 1, 1));
    EXPECT_EQ(ws.recv().at("type"), "error");
    ws.close();
  }

  auto ratings = json::parse(http_request(port, http::verb::get, "/ratings").body);
  ASSERT_EQ(ratings.at("ratings").size(), 1u);
  auto r = rating_from_json(ratings.at("ratings").at(0));
  EXPECT_EQ(r.baseline, "hp_true");
  EXPECT_EQ(r.task_id, test_task());
  EXPECT_EQ(r.goal_knowledge, 6);
  EXPECT_EQ(r.helpfulness, 5);
  EXPECT_EQ(r.trust, 7);
  EXPECT_NEAR(ratings.at("summary").at("hp_true").at("trust").at("mean").get<double>(), 7.0, 1e-12);
  EXPECT_EQ(store_->ratings(), std::vector<RatingRecord>{r});
  server.stop();
}

TEST_F(SessionTest, SoloSessionRejectsRating) {
  SessionOptions short_run;
  short_run.step_limit = 2;
  Session brief(*ds_, test_task(), "none", "brief", nullptr, short_run);
  const NodeId alice = find_type(brief.start(), "hello")->at("alice").get<NodeId>();
  brief.handle(action_msg(Action::noop(alice), 0));
  auto out = brief.handle(action_msg(Action::noop(alice), 1));
  ASSERT_NE(find_type(out, "episode_end"), nullptr);
  EXPECT_EQ(find_type(out, "episode_end")->at("status"), "timeout");
  auto err = brief.handle(rating_msg(3, 3, 3));
  EXPECT_EQ(err.at(0).at("type"), "error");
}

TEST_F(SessionTest, ObservationMatchesEngineFilter) {
  Session s(*ds_, test_task(), "hp_true", "obs", nullptr);
  auto first = s.start();
  const NodeId alice = find_type(first, "hello")->at("alice").get<NodeId>();
  for (int t = 0; t < 5; ++t) {
    const auto* obs = find_type(first, "observation");
    const auto* avail = find_type(first, "available_actions");
    ASSERT_NE(obs, nullptr);
    ASSERT_NE(avail, nullptr);
    EXPECT_EQ(obs->at("observation"), observation_to_json(visible_set(s.scene(), alice)));
    std::vector<Action> offered;
    for (const auto& a : avail->at("actions")) offered.push_back(action_from_json(a));
    EXPECT_EQ(offered, legal_actions(s.scene(), alice, {}, true));
    first = s.handle(action_msg(offered.at(static_cast<std::size_t>(t) % offered.size()), t));
  }
}

TEST_F(SessionTest, IllegalClickAdvancesOnlyBob) {
  Session s(*ds_, test_task(), "hp_true", "click", nullptr);
  auto first = s.start();
  const NodeId alice = find_type(first, "hello")->at("alice").get<NodeId>();
  const NodeId bob = find_type(first, "hello")->at("bob").get<NodeId>();
  const auto vis = visible_set(s.scene(), alice);
  NodeId hidden = kNoNode;
  for (NodeId id : s.scene().movables()) {
    if (std::none_of(vis.nodes.begin(), vis.nodes.end(), [&](const ObjectNode& n) { return n.id == id; })) hidden = id;
  }
  ASSERT_NE(hidden, kNoNode);
  const SceneGraph before = s.scene();
  auto out = s.handle(action_msg(Action::make(ActionKind::grab, alice, hidden), 0));
  ASSERT_EQ(out.at(0).at("type"), "tick_result");
  EXPECT_EQ(out.at(0).at("outcome"), "not_visible");

  // oracle: Bob's recorded action alone, stepped on the pre-tick state
  auto expect = before;
  step(expect, {{bob, s.trace().ticks.at(0).actions.at(bob)}});
  EXPECT_EQ(expect.hash(), s.scene().hash());
}
