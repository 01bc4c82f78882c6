#pragma once

#include "liveia/store.hpp"

#include <memory>
#include <string>

namespace liveia::service {

inline constexpr int kDefaultPort = 8642;
/// Upper bound on /frames?steps=K.
inline constexpr int kMaxFrames = 240;

/// HTTP+JSON facade over a Store. Handlers keep no state between requests;
/// write ordering is left to the store.
class Service {
  public:
    explicit Service(store::Store& store);
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Bind without serving. Port 0 picks a free port. Returns the bound port;
    /// throws Error(Io) if binding fails.
    int bind(const std::string& host, int port);
    /// Serve until stop(); call after bind.
    void run();
    void stop();

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace liveia::service
