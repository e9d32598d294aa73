#ifndef HTTPA_HTTPA_H
#define HTTPA_HTTPA_H

/* C interface to the HTTPA library. Handles are opaque; every call that can
 * fail returns an httpa_status and leaves a message for httpa_last_error()
 * on the calling thread. */

#include <stddef.h>
#include <stdint.h>

#if defined(__GNUC__)
#define HTTPA_API __attribute__((visibility("default")))
#else
#define HTTPA_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values double as CLI exit codes. */
typedef enum {
  HTTPA_OK = 0,
  HTTPA_ERR_CONFIG = 1,                /* bad arguments or configuration */
  HTTPA_ERR_NOT_ATTESTABLE = 2,        /* server does not speak HTTPA */
  HTTPA_ERR_QUOTE_REJECTED = 3,        /* attestation verdict was not Pass */
  HTTPA_ERR_POLICY_REJECTED = 4,       /* identities rejected by policy */
  HTTPA_ERR_CONFIRMATION_MISMATCH = 5, /* key confirmation failed */
  HTTPA_ERR_TRANSPORT = 6,             /* connect, I/O or unexpected HTTP status */
  HTTPA_ERR_HANDSHAKE = 7,             /* any other handshake failure */
  HTTPA_ERR_BIND = 8,                  /* server could not bind */
  HTTPA_ERR_RECORD = 9,                /* record authentication, replay, closed channel */
  HTTPA_ERR_INTERNAL = 10
} httpa_status;

typedef struct {
  uint8_t* data;
  size_t len;
} httpa_buffer;

typedef struct httpa_server httpa_server;
typedef struct httpa_verifier httpa_verifier;
typedef struct httpa_client httpa_client;

HTTPA_API const char* httpa_status_string(httpa_status status);
/* Message for the last failed call on this thread; never NULL. */
HTTPA_API const char* httpa_last_error(void);
HTTPA_API void httpa_buffer_free(httpa_buffer* buf);

/* "debug", "info", "warn", "error" or "off". */
HTTPA_API httpa_status httpa_set_log_level(const char* level);

/* Writes demo roots and credentials into out_dir; seed is used when has_seed
 * is nonzero, tls nonzero also writes a self-signed localhost certificate. */
HTTPA_API httpa_status httpa_keygen(const char* out_dir, int has_seed, uint64_t seed, int tls);

/* P_SHA256(secret, label || seed) truncated to out_len bytes. */
HTTPA_API httpa_status httpa_prf(const uint8_t* secret, size_t secret_len, const char* label,
                                 const uint8_t* seed, size_t seed_len, size_t out_len,
                                 httpa_buffer* out);

/* Server. config_json is a ServerConfig JSON object. */
HTTPA_API httpa_status httpa_server_create(const char* config_json, httpa_server** out);
HTTPA_API httpa_status httpa_server_start(httpa_server* server);
HTTPA_API uint16_t httpa_server_port(const httpa_server* server);
/* JSON object with handshake and record counters. */
HTTPA_API httpa_status httpa_server_stats(const httpa_server* server, httpa_buffer* out);
HTTPA_API void httpa_server_stop(httpa_server* server);
HTTPA_API void httpa_server_destroy(httpa_server* server);

/* Attestation service answering POST /verify. */
HTTPA_API httpa_status httpa_verifier_create(const char* config_json, httpa_verifier** out);
HTTPA_API httpa_status httpa_verifier_start(httpa_verifier* verifier);
HTTPA_API uint16_t httpa_verifier_port(const httpa_verifier* verifier);
HTTPA_API void httpa_verifier_stop(httpa_verifier* verifier);
HTTPA_API void httpa_verifier_destroy(httpa_verifier* verifier);

/* Client. config_json is a ClientConfig JSON object. */
HTTPA_API httpa_status httpa_client_create(const char* config_json, httpa_client** out);
/* Attests the server (or resumes a cached session) and sends body as a
 * protected record; out receives the decrypted response body. */
HTTPA_API httpa_status httpa_client_request(httpa_client* client, const char* method,
                                            const uint8_t* body, size_t body_len,
                                            httpa_buffer* out);
/* JSON report of the last request: identities, verdict, handshake kind,
 * or the failure reason. */
HTTPA_API httpa_status httpa_client_report(const httpa_client* client, httpa_buffer* out);
/* Number of ATTEST requests this client has written. */
HTTPA_API size_t httpa_client_attest_count(const httpa_client* client);
HTTPA_API void httpa_client_destroy(httpa_client* client);

#ifdef __cplusplus
}
#endif

#endif
