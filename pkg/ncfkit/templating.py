# Copyright 2023 Canonical Ltd.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Module for rendering report templates."""

import logging
import os
from typing import (
    Mapping,
    Optional,
)

import jinja2

log = logging.getLogger(__name__)

TEMPLATE_DIR = os.path.join(os.path.dirname(__file__), "templates")


def get_environment(template_dir: Optional[str] = None) -> jinja2.Environment:
    """Jinja2 environment loading from the given or packaged templates."""
    loader = jinja2.FileSystemLoader(template_dir or TEMPLATE_DIR)
    return jinja2.Environment(
        loader=loader,
        keep_trailing_newline=True,
        trim_blocks=True,
        lstrip_blocks=True,
        undefined=jinja2.StrictUndefined,
    )


def render(
    name: str,
    context: Mapping,
    template_dir: Optional[str] = None,
) -> str:
    """Render the named template.

    Looks for ``name + ".j2"`` first and falls back to ``name``.

    :return: The rendered text.
    :rtype: str
    """
    _tmpl_env = get_environment(template_dir)
    try:
        template = _tmpl_env.get_template(name + ".j2")
    except jinja2.exceptions.TemplateNotFound:
        template = _tmpl_env.get_template(name)
    contents = template.render(context)
    log.debug(f"Rendered template {name} ({len(contents)} characters).")
    return contents
