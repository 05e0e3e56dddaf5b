#pragma once

#include <memory>
#include <optional>
#include <string>

#include "bop2dc/engine.hpp"

namespace bop2dc {

enum class JobState { Queued, Running, Done, Failed };
std::string to_string(JobState s);

enum class JobKind { Calibrate, Simulate };

struct JobSnapshot {
    std::string id;
    JobKind kind = JobKind::Calibrate;
    JobState state = JobState::Queued;
    double progress = 0.0;
    nlohmann::ordered_json config;
    std::optional<std::string> result;  // serialized payload, present iff done
    std::optional<std::string> error;   // present iff failed
};

nlohmann::ordered_json job_to_json(const JobSnapshot& job);

// In-process job queue drained by a fixed pool of workers. Jobs are lost
// when the process exits.
class JobManager {
public:
    explicit JobManager(int workers = 0, int threads_per_job = 0);
    ~JobManager();
    JobManager(const JobManager&) = delete;
    JobManager& operator=(const JobManager&) = delete;

    std::string submit(JobKind kind, DesignConfig config);
    std::optional<JobSnapshot> get(const std::string& id) const;
    // Blocks until the job leaves the queued/running states.
    std::optional<JobSnapshot> wait(const std::string& id) const;
    int workers() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

struct ServiceOptions {
    int workers = 0;          // job pool size, 0 = available parallelism
    int threads_per_job = 0;  // engine threads per job, 0 = available parallelism
};

// HTTP/1.1 JSON API over the engine.
class Service {
public:
    explicit Service(ServiceOptions opt = {});
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    // Binds to host:port (port 0 picks a free port) and returns the bound
    // port, or -1 on failure.
    int bind(const std::string& host, int port);
    // Serves requests until stop() is called.
    bool listen();
    void stop();
    void wait_until_ready() const;

    JobManager& jobs();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Port from BOP2DC_PORT, else the fallback.
int default_port(int fallback = 8080);

}  // namespace bop2dc
