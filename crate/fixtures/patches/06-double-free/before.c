static void release_buf(struct ctx *c)
{
	kfree(c->buf);
	c->len = 0;
	kfree(c->buf);
	c->buf = NULL;
}
