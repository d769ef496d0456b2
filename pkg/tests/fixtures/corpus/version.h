/* Build identity; the release script rewrites the numbers below. */
#ifndef PROTO_VERSION_H
#define PROTO_VERSION_H

#define PROTO_VERSION_MAJOR 2
#define PROTO_VERSION_MINOR 11
#define PROTO_VERSION_PATCH 0

#define PROTO_VERSION_STRING "2.11.0"

#define PROTO_VERSION_AT_LEAST(maj, min) \
    (PROTO_VERSION_MAJOR > (maj) || \
     (PROTO_VERSION_MAJOR == (maj) && PROTO_VERSION_MINOR >= (min)))

#endif
