#include <math.h>
#include <stdio.h>
#include <string.h>

#include "sfde.h"

#define CHECK(call)                                                   \
  do {                                                                \
    SfdeStatus s_ = (call);                                           \
    if (s_ != SFDE_STATUS_OK) {                                       \
      char msg_[256];                                                 \
      sfde_last_error(msg_, sizeof msg_);                             \
      fprintf(stderr, "%s -> %d: %s\n", #call, (int)s_, msg_);        \
      return 1;                                                       \
    }                                                                 \
  } while (0)

static const char *MODEL =
    "{\"name\": \"ou\", \"kind\": \"nondegenerate\", \"dim\": 1, \"rate\": 1.0,"
    " \"drift\": {\"op\": \"scale\", \"factor\": -1.0, \"arg\": {\"op\": \"point\"}},"
    " \"diffusion\": [{\"scalar\": {\"op\": \"const\", \"value\": [1.0]}}],"
    " \"constants\": {\"k1\": 2.0, \"sigma_max\": 1.0, \"sigma_inv_max\": 1.0}}";

int main(void) {
  SfdeModel *m = NULL;
  SfdeSegment *xi = NULL;
  SfdeTrajectory *tr = NULL;
  SfdeCoupled *c = NULL;
  double one = 1.0, norm = 0.0, t = 0.0, x = 0.0, y = 0.0, lr = 1.0;
  size_t len = 0, dim = 0;

  CHECK(sfde_model_from_json(MODEL, &m));
  CHECK(sfde_model_dim(m, &dim));
  if (dim != 1) return 2;
  CHECK(sfde_segment_constant(&one, 1, 0.01, 2000, &xi));
  CHECK(sfde_weighted_norm(xi, 1.0, &norm));
  if (fabs(norm - 1.0) > 1e-15) return 3;

  CHECK(sfde_simulate(m, xi, 0.01, 1.0, 42, &tr));
  CHECK(sfde_trajectory_len(tr, &len));
  if (len != 101) return 4;
  CHECK(sfde_trajectory_row(tr, len - 1, &t, &x, NULL));
  printf("simulate %.17g %.17g\n", t, x);

  CHECK(sfde_couple(m, xi, xi, NAN, SFDE_MEASURE_Q, 0.01, 1.0, 42, &c));
  CHECK(sfde_coupled_len(c, &len));
  CHECK(sfde_coupled_row(c, len - 1, NULL, &x, &y, &lr, NULL));
  if (x != y || lr != 0.0) return 5;

  SfdeHamiltonianConstants k;
  CHECK(sfde_hamiltonian_constants(1.0, 0.0, 1.0, 0.5, &k));
  printf("p0 %.17g\n", k.p0);

  if (sfde_segment_constant(&one, 1, -1.0, 10, &xi) == SFDE_STATUS_OK) return 6;
  char buf[8];
  size_t need = sfde_last_error(buf, sizeof buf);
  if (need <= sizeof buf || strlen(buf) != sizeof buf - 1) return 7;

  sfde_coupled_free(c);
  sfde_trajectory_free(tr);
  sfde_segment_free(xi);
  sfde_model_free(m);
  printf("ok %s\n", sfde_version());
  return 0;
}
