#include <math.h>
#include <stdio.h>
#include <string.h>
#include "slepian_qns.h"

int main(void) {
    SqTaperSet *set = NULL;
    if (sq_dpss_compute(32, 0.125, 1, &set) != SQ_STATUS_OK) return 1;
    double v[32];
    if (sq_taper_set_values(set, 0, v, 32) != SQ_STATUS_OK) return 2;
    double s = 0.0;
    for (int i = 0; i < 32; i++) s += v[i] * v[i];
    if (fabs(s - 1.0) > 1e-10) return 3;

    SqWaveform *wf = NULL;
    if (sq_waveform_from_taper(set, 0, 1e-6, SQ_MODULATION_COS, 1e5, 900.0, &wf) != SQ_STATUS_OK) return 4;
    SqPsd *psd = NULL;
    if (sq_psd_lorentzian(1e-4, 1e5, 2e4, &psd) != SQ_STATUS_OK) return 5;
    SqSignal sig;
    if (sq_simulate(psd, wf, 200, 7, &sig) != SQ_STATUS_OK) return 6;
    if (sig.shots != 200) return 7;

    if (sq_dpss_compute(0, 0.1, 0, &set) != SQ_STATUS_INVALID_ARGUMENT) return 8;
    char msg[256];
    if (sq_last_error_message(msg, sizeof msg) <= 0) return 9;
    printf("version %s, last error: %s\n", sq_version(), msg);

    sq_psd_free(psd);
    sq_waveform_free(wf);
    sq_taper_set_free(set);
    return 0;
}
