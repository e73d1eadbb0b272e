import logging

from pythonjsonlogger import jsonlogger

from PhotonicProtocols.constants import JSON_LOG_FILE_PATH, LOG_FILE_PATH

logging.basicConfig(
    level=logging.DEBUG,
    filename=LOG_FILE_PATH,
    filemode="w",
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    datefmt="%m/%d/%Y %H:%M",
    force=True,
)

json_handler = logging.FileHandler(JSON_LOG_FILE_PATH, mode="w")
json_handler.setLevel(logging.INFO)
json_handler.setFormatter(
    jsonlogger.JsonFormatter("%(asctime)s %(name)s %(levelname)s %(message)s")
)
logging.getLogger().addHandler(json_handler)
