/*
 *  linux/fs/exec.c
 */
#include <linux/slab.h>
#include <linux/mm.h>
#include <linux/binfmts.h>

static struct page *get_arg_page(struct linux_binprm *bprm, unsigned long pos,
		int write)
{
	struct page *page;
	int ret;
	unsigned int gup_flags = FOLL_FORCE;

	if (write)
		gup_flags |= FOLL_WRITE;

	ret = get_user_pages_remote(current, bprm->mm, pos, 1, gup_flags,
			&page, NULL, NULL);
	if (ret <= 0)
		return NULL;

	if (write) {
		unsigned long size = bprm->vma->vm_end - bprm->vma->vm_start;
		struct rlimit *rlim;

		acct_arg_size(bprm, size / PAGE_SIZE);

		if (size <= ARG_MAX)
			return page;

		rlim = current->signal->rlim;
		if (size > min_t(unsigned long, READ_ONCE(rlim[RLIMIT_STACK].rlim_cur) / 4, _STK_LIM / 4 * 3))
			goto fail;
	}

	return page;

fail:
	put_page(page);
	return NULL;
}
