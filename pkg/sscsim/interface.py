from .getconfig import settings, setting_info
from .utils import output, pad_text


def instructions():
    output("sscsim: sparse superimposed coding link simulator", "title")
    output("Run with python -m sscsim <command> [options]:", "instructions")
    print('  sweep            BLER versus SNR, R or block length; writes a CSV and its .meta.json.')
    print('  complexity       Encode/decode MAC counts and codebook storage against the dense codebook.')
    print('  roundtrip-check  Noiseless end-to-end packets and a codebook file round trip.')
    print('  settings         Prints these instructions and the settings below.')
    output("Settings read from config.ini [Settings]:", "instructions")
    for k, v in setting_info.items():
        print(pad_text('  ' + k, 23) + v[0] + (" " if v[0] else "") +
              "Default: " + str(v[1]) + " | "
              "Current: " + settings.get(k))
