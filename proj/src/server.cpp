#include <chrono>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "wah/session.hpp"

namespace wah {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace asio = boost::asio;
using tcp = asio::ip::tcp;
using json = nlohmann::json;
namespace fs = std::filesystem;

struct Server::Impl {
  asio::io_context ioc;
  tcp::acceptor acceptor{ioc};
  int port = 0;
  std::mutex mu;
  std::set<tcp::socket*> live;
  std::vector<std::thread> workers;

  void track(tcp::socket* s) {
    std::lock_guard lk(mu);
    live.insert(s);
  }
  void untrack(tcp::socket* s) {
    std::lock_guard lk(mu);
    live.erase(s);
  }
};

Server::Server(ServerOptions opts)
    : opts_(std::move(opts)),
      dataset_(opts_.dataset_dir.empty() ? Dataset{} : load_dataset(opts_.dataset_dir)),
      store_(opts_.data_dir),
      impl_(std::make_unique<Impl>()) {}

Server::~Server() { stop(); }

int Server::start() {
  auto& acc = impl_->acceptor;
  tcp::endpoint ep(asio::ip::make_address("0.0.0.0"), static_cast<unsigned short>(opts_.port));
  acc.open(ep.protocol());
  acc.set_option(asio::socket_base::reuse_address(true));
  acc.bind(ep);
  acc.listen();
  impl_->port = acc.local_endpoint().port();
  acceptor_ = std::thread([this] { accept_loop(); });
  spdlog::info("listening on port {}", impl_->port);
  return impl_->port;
}

void Server::run() {
  if (!acceptor_.joinable()) start();
  acceptor_.join();
  for (auto& w : impl_->workers) w.join();
  impl_->workers.clear();
}

void Server::stop() {
  if (!impl_ || stopping_.exchange(true)) return;
  if (acceptor_.joinable()) {
    // wake the blocking accept
    try {
      asio::io_context ioc;
      tcp::socket s(ioc);
      s.connect(tcp::endpoint(asio::ip::make_address("127.0.0.1"), static_cast<unsigned short>(impl_->port)));
    } catch (const std::exception&) {
    }
    acceptor_.join();
  }
  {
    std::lock_guard lk(impl_->mu);
    for (auto* s : impl_->live) {
      beast::error_code ec;
      s->shutdown(tcp::socket::shutdown_both, ec);
    }
  }
  for (auto& w : impl_->workers) w.join();
  impl_->workers.clear();
  beast::error_code ec;
  impl_->acceptor.close(ec);
}

void Server::accept_loop() {
  while (!stopping_) {
    auto sock = std::make_unique<tcp::socket>(impl_->ioc);
    beast::error_code ec;
    impl_->acceptor.accept(*sock, ec);
    if (stopping_) break;
    if (ec) continue;
    impl_->workers.emplace_back([this, s = sock.release()] {
      std::unique_ptr<tcp::socket> owned(s);
      serve_connection(owned.get());
    });
  }
}

namespace {

std::string content_type(const fs::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".html") return "text/html";
  if (ext == ".js") return "application/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  return "application/octet-stream";
}

http::response<http::string_body> reply(const http::request<http::string_body>& req, http::status st, std::string body,
                                        const std::string& type) {
  http::response<http::string_body> res{st, req.version()};
  res.set(http::field::content_type, type);
  res.keep_alive(req.keep_alive());
  res.body() = std::move(body);
  res.prepare_payload();
  return res;
}

}  // namespace

void Server::serve_connection(void* raw) {
  auto* sock = static_cast<tcp::socket*>(raw);
  impl_->track(sock);
  beast::flat_buffer buf;
  try {
    while (!stopping_) {
      http::request<http::string_body> req;
      beast::error_code ec;
      http::read(*sock, buf, req, ec);
      if (ec) break;
      const std::string target(req.target());

      if (websocket::is_upgrade(req)) {
        if (target != "/ws") {
          http::write(*sock, reply(req, http::status::not_found, "no such endpoint\n", "text/plain"));
          break;
        }
        impl_->untrack(sock);
        websocket::stream<tcp::socket> ws(std::move(*sock));
        auto* lowest = &beast::get_lowest_layer(ws);
        impl_->track(lowest);
        ws.accept(req);
        ws.text(true);
        std::unique_ptr<Session> session;
        auto send = [&](const std::vector<json>& msgs) {
          for (const auto& m : msgs) ws.write(asio::buffer(m.dump()));
        };
        while (true) {
          beast::flat_buffer in;
          ws.read(in, ec);
          if (ec) break;
          json msg;
          try {
            msg = json::parse(beast::buffers_to_string(in.data()));
          } catch (const json::exception& e) {
            send({error_message(std::string("malformed message: ") + e.what())});
            continue;
          }
          if (!session) {
            if (msg.value("type", "") != "hello") {
              send({error_message("open the session with a hello message")});
              continue;
            }
            try {
              const auto id = fmt::format("{:x}-{}", std::chrono::system_clock::now().time_since_epoch().count(),
                                          next_session_.fetch_add(1));
              session = std::make_unique<Session>(dataset_, msg.at("task").get<int>(), msg.value("baseline", "none"), id, &store_,
                                                  opts_.session);
              send(session->start());
            } catch (const std::exception& e) {
              send({error_message(e.what())});
              ws.close(websocket::close_code::normal, ec);
              break;
            }
            continue;
          }
          send(session->handle(msg));
        }
        if (session) session->disconnect();
        impl_->untrack(lowest);
        return;
      }

      http::response<http::string_body> res;
      if (req.method() != http::verb::get) {
        res = reply(req, http::status::method_not_allowed, "GET only\n", "text/plain");
      } else if (target == "/tasks") {
        json tasks = json::array();
        for (const auto& t : dataset_.tasks) {
          tasks.push_back({{"id", t.id}, {"split", split_name(t.split)}, {"activity", activity_name(t.activity)},
                           {"goal", goal_text(t.goal)}, {"apartment", t.help_apartment}});
        }
        res = reply(req, http::status::ok, tasks.dump(), "application/json");
      } else if (target == "/ratings") {
        const auto ratings = store_.ratings();
        json arr = json::array();
        for (const auto& r : ratings) arr.push_back(rating_to_json(r));
        json body{{"ratings", arr}, {"summary", aggregate({}, ratings)["ratings"]}};
        res = reply(req, http::status::ok, body.dump(), "application/json");
      } else {
        std::string rel = target == "/" ? "index.html" : target.substr(1);
        const auto q = rel.find('?');
        if (q != std::string::npos) rel.resize(q);
        const fs::path p = fs::path(opts_.static_dir) / rel;
        std::ifstream f(p, std::ios::binary);
        if (opts_.static_dir.empty() || rel.find("..") != std::string::npos || !f) {
          res = reply(req, http::status::not_found, "not found\n", "text/plain");
        } else {
          std::stringstream ss;
          ss << f.rdbuf();
          res = reply(req, http::status::ok, ss.str(), content_type(p));
        }
      }
      http::write(*sock, res, ec);
      if (ec || !req.keep_alive()) break;
    }
  } catch (const std::exception& e) {
    spdlog::warn("connection: {}", e.what());
  }
  impl_->untrack(sock);
  beast::error_code ec;
  sock->shutdown(tcp::socket::shutdown_both, ec);
}

}  // namespace wah
