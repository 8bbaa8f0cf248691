#pragma once
#ifndef DYANIM_SERVER_HPP
#define DYANIM_SERVER_HPP

// Line-delimited JSON transports for Connection: a stream pair and a POSIX
// TCP listener (one thread per client).

#include "dyanim/service.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <istream>
#include <list>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>

namespace dyanim::facade {

// Serves one client over a stream pair until EOF or a Quit command.
inline void serve_stream(std::istream& in, std::ostream& out, const ServiceOptions& options)
{
    Connection conn{[&out](const WireMessage& m) { out << m.dump() << "\n" << std::flush; }, options};
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (!conn.on_line(line)) break;
    }
    conn.wait_idle();
}

class TcpServer {
public:
    explicit TcpServer(ServiceOptions options) : options_(std::move(options)) {}

    TcpServer(const TcpServer&) = delete;
    TcpServer& operator=(const TcpServer&) = delete;

    ~TcpServer()
    {
        stop();
        for (auto& t : clients_) {
            if (t.joinable()) t.join();
        }
    }

    // Binds to 127.0.0.1:port; port 0 picks a free one. Returns the bound port.
    std::uint16_t listen(std::uint16_t port)
    {
        fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
        if (fd_ < 0) throw std::runtime_error(std::string{"socket: "} + std::strerror(errno));
        int yes = 1;
        ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof yes);
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
        addr.sin_port = htons(port);
        if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(fd_, 8) != 0) {
            std::string why = std::strerror(errno);
            ::close(fd_);
            fd_ = -1;
            throw std::runtime_error("cannot listen on port " + std::to_string(port) + ": " + why);
        }
        socklen_t len = sizeof addr;
        ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
        return ntohs(addr.sin_port);
    }

    // Accepts clients until stop().
    void run()
    {
        while (!stopping_) {
            int client = ::accept(fd_, nullptr, nullptr);
            if (client < 0) {
                if (stopping_) break;
                if (errno == EINTR) continue;
                throw std::runtime_error(std::string{"accept: "} + std::strerror(errno));
            }
            clients_.emplace_back([this, client] { serve_client(client); });
        }
    }

    void stop()
    {
        if (stopping_.exchange(true)) return;
        if (fd_ >= 0) {
            ::shutdown(fd_, SHUT_RDWR);
            ::close(fd_);
            fd_ = -1;
        }
    }

private:
    void serve_client(int client)
    {
        auto write_all = [client](const std::string& s) {
            std::size_t off = 0;
            while (off < s.size()) {
                ssize_t n = ::send(client, s.data() + off, s.size() - off, MSG_NOSIGNAL);
                if (n <= 0) return;
                off += static_cast<std::size_t>(n);
            }
        };
        {
            Connection conn{[&](const WireMessage& m) { write_all(m.dump() + "\n"); }, options_};
            std::string buffer;
            char chunk[4096];
            bool open = true;
            while (open) {
                ssize_t n = ::recv(client, chunk, sizeof chunk, 0);
                if (n <= 0) break;
                buffer.append(chunk, static_cast<std::size_t>(n));
                std::size_t nl;
                while (open && (nl = buffer.find('\n')) != std::string::npos) {
                    std::string line = buffer.substr(0, nl);
                    buffer.erase(0, nl + 1);
                    if (!line.empty() && line.back() == '\r') line.pop_back();
                    if (!line.empty()) open = conn.on_line(line);
                }
            }
            // Leaving the scope cancels a search the client no longer waits for.
        }
        ::close(client);
    }

    ServiceOptions options_;
    int fd_ = -1;
    std::atomic<bool> stopping_{false};
    std::list<std::thread> clients_;
};

}  // namespace dyanim::facade

#endif  // DYANIM_SERVER_HPP
