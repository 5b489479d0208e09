#pragma once

#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

#include "fedtgan/wire.hpp"

namespace fedtgan {

/// Something that answers request frames with reply frames (a client role).
class Endpoint {
public:
    virtual ~Endpoint() = default;
    virtual wire::Bytes handle(const wire::Bytes& request) = 0;
};

/// Federator-side view of the clients: one request, one reply, asynchronously.
class Transport {
public:
    virtual ~Transport() = default;
    virtual std::size_t clients() const = 0;
    virtual std::future<wire::Bytes> call(std::size_t client, wire::Bytes request) = 0;
};

/// One worker thread per client; requests to a client are handled in order.
class InProcTransport : public Transport {
public:
    explicit InProcTransport(std::vector<Endpoint*> endpoints) {
        for (auto* e : endpoints) workers_.push_back(std::make_unique<Worker>(e));
    }

    std::size_t clients() const override { return workers_.size(); }

    std::future<wire::Bytes> call(std::size_t client, wire::Bytes request) override {
        require(client < workers_.size(), ErrorKind::InvalidArgument, "no client " + std::to_string(client));
        return workers_[client]->submit(std::move(request));
    }

private:
    class Worker {
    public:
        explicit Worker(Endpoint* e) : endpoint_(e), thread_([this] { loop(); }) {}
        ~Worker() {
            {
                std::lock_guard lock(mu_);
                stop_ = true;
            }
            cv_.notify_one();
            thread_.join();
        }

        std::future<wire::Bytes> submit(wire::Bytes request) {
            std::promise<wire::Bytes> p;
            auto f = p.get_future();
            {
                std::lock_guard lock(mu_);
                queue_.push_back({std::move(request), std::move(p)});
            }
            cv_.notify_one();
            return f;
        }

    private:
        struct Job {
            wire::Bytes request;
            std::promise<wire::Bytes> reply;
        };

        void loop() {
            for (;;) {
                Job job;
                {
                    std::unique_lock lock(mu_);
                    cv_.wait(lock, [&] { return stop_ || !queue_.empty(); });
                    if (queue_.empty()) return;
                    job = std::move(queue_.front());
                    queue_.pop_front();
                }
                try {
                    job.reply.set_value(endpoint_->handle(job.request));
                } catch (...) {
                    job.reply.set_exception(std::current_exception());
                }
            }
        }

        Endpoint* endpoint_;
        std::mutex mu_;
        std::condition_variable cv_;
        std::deque<Job> queue_;
        bool stop_ = false;
        std::thread thread_;
    };

    std::vector<std::unique_ptr<Worker>> workers_;
};

/// Handles every request on its own thread after a random delay, so replies
/// complete in an order unrelated to the order of the calls.
class JitterTransport : public Transport {
public:
    JitterTransport(std::vector<Endpoint*> endpoints, std::uint64_t seed, std::chrono::microseconds max_delay)
        : endpoints_(std::move(endpoints)), rng_(seed), max_delay_(max_delay) {}

    std::size_t clients() const override { return endpoints_.size(); }

    std::future<wire::Bytes> call(std::size_t client, wire::Bytes request) override {
        require(client < endpoints_.size(), ErrorKind::InvalidArgument, "no client " + std::to_string(client));
        std::chrono::microseconds delay;
        {
            std::lock_guard lock(mu_);
            delay = std::chrono::microseconds(
                std::uniform_int_distribution<std::int64_t>(0, max_delay_.count())(rng_));
        }
        auto* e = endpoints_[client];
        return std::async(std::launch::async, [e, delay, req = std::move(request)] {
            std::this_thread::sleep_for(delay);
            return e->handle(req);
        });
    }

private:
    std::vector<Endpoint*> endpoints_;
    std::mutex mu_;
    std::mt19937_64 rng_;
    std::chrono::microseconds max_delay_;
};

struct TrafficCounters {
    std::uint64_t bytes_to_clients = 0;
    std::uint64_t bytes_from_clients = 0;
    std::uint64_t messages = 0;
    std::map<wire::Tag, std::uint64_t> bytes_by_tag;
    std::map<wire::Tag, std::uint64_t> messages_by_tag;
};

/// Wraps another transport and independently tallies every frame it carries.
/// Optionally keeps a copy of every frame for inspection.
class CountingTransport : public Transport {
public:
    explicit CountingTransport(Transport& inner, bool capture = false) : inner_(inner), capture_(capture) {}

    std::size_t clients() const override { return inner_.clients(); }

    std::future<wire::Bytes> call(std::size_t client, wire::Bytes request) override {
        record(request, true);
        auto reply = inner_.call(client, std::move(request));
        return std::async(std::launch::async, [this, f = std::move(reply)]() mutable {
            auto bytes = f.get();
            record(bytes, false);
            return bytes;
        });
    }

    TrafficCounters counters() const {
        std::lock_guard lock(mu_);
        return counters_;
    }

    std::vector<wire::Bytes> frames() const {
        std::lock_guard lock(mu_);
        return frames_;
    }

private:
    void record(const wire::Bytes& frame, bool outbound) {
        std::lock_guard lock(mu_);
        const auto tag = wire::frame_tag(frame);
        (outbound ? counters_.bytes_to_clients : counters_.bytes_from_clients) += frame.size();
        ++counters_.messages;
        counters_.bytes_by_tag[tag] += frame.size();
        ++counters_.messages_by_tag[tag];
        if (capture_) frames_.push_back(frame);
    }

    Transport& inner_;
    bool capture_;
    mutable std::mutex mu_;
    TrafficCounters counters_;
    std::vector<wire::Bytes> frames_;
};

}  // namespace fedtgan
